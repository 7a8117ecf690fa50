#pragma once

#include <filesystem>

#include "apf/core/geometry.hpp"
#include "apf/core/mask.hpp"

namespace apf::io {

/// Read a NIfTI-1 volume (.nii or .nii.gz). Geometry comes from dim,
/// pixdim and the sform (qform when sform_code is 0, pixdim scaling when
/// both codes are 0). scl_slope/scl_inter are applied when the slope is
/// non-zero. Throws ParseError (with byte offset) on malformed headers,
/// unsupported datatypes or non-3-D data, IoError when the file cannot be read.
Volume3D read_volume(const std::filesystem::path &path);

/// read_volume followed by thresholding at 0.5.
BinaryMask read_mask(const std::filesystem::path &path);

/// Write a mask as unsigned 8-bit 0/1 with the grid affine as sform.
/// Compressed when the name ends in ".gz". Written atomically.
void write_mask(const std::filesystem::path &path, const BinaryMask &mask);

} // namespace apf::io
