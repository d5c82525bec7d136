// Copyright 2026 The pathsynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file nifti.hpp
/// @brief NIfTI-1 single-file (.nii / .nii.gz) reader and writer.
///
/// Supported datatypes: uint8, int16, uint16, int32, float32, float64.
/// Files may be big- or little-endian on read (detected from dim[0]); files
/// are written little-endian with an sform built from the volume affine.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathsynth/volume.hpp"

namespace pathsynth {

enum class NiftiDatatype : std::int16_t {
  UInt8 = 2,
  Int16 = 4,
  Int32 = 8,
  Float32 = 16,
  Float64 = 64,
  UInt16 = 512,
};

const char* to_string(NiftiDatatype t);
NiftiDatatype nifti_datatype_from_string(const std::string& name);

class NiftiError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, UnsupportedDatatype, BadDimensions, Truncated, OutOfRange };

  NiftiError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct NiftiImage {
  Volume volume;  ///< scaled by scl_slope / scl_inter when set
  NiftiDatatype datatype = NiftiDatatype::Float32;
};

/// Parses a whole (already decompressed) NIfTI-1 byte stream.
NiftiImage parse_nifti(std::span<const std::uint8_t> bytes);
/// Serialises a volume; values are rounded and range-checked for integer types.
std::vector<std::uint8_t> encode_nifti(const Volume& v, NiftiDatatype datatype);

/// Reads `.nii` or gzip-compressed `.nii.gz` (detected from the stream magic).
NiftiImage read_nifti(const std::filesystem::path& path);
Volume read_volume(const std::filesystem::path& path);
/// Integral values only; every label must be in `table` unless
/// `unknown_as_other` is set, in which case missing IDs map to Other.
LabelVolume read_labels(const std::filesystem::path& path, const LabelTable& table,
                        bool unknown_as_other = false);
/// Values must lie in [0,1] after scaling.
ProbVolume read_prob(const std::filesystem::path& path);

/// Gzip-compresses when the path ends in ".gz". Output is byte-deterministic.
void write_nifti(const Volume& v, const std::filesystem::path& path,
                 NiftiDatatype datatype = NiftiDatatype::Float32);
void write_nifti(const LabelVolume& v, const std::filesystem::path& path,
                 NiftiDatatype datatype = NiftiDatatype::Int16);

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes);
/// Stops quietly at the end of a truncated stream; corrupt data throws.
std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes);

}  // namespace pathsynth
