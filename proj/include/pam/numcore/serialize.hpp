// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "pam/numcore/layers.hpp"

namespace pam::num {

// Weight file layout (all integers and doubles little-endian):
//   char[8]  magic "PAMW0001"
//   u32      header length H, then H bytes of UTF-8 JSON (model config)
//   u32      parameter count P
//   P times: u32 name length, name bytes, u32 rank, u64 dims[rank],
//            f64 values[prod(dims)] row-major
// Loading matches parameters by name and shape; any mismatch is an error.

void save_parameters(const std::filesystem::path& path, const std::string& header_json,
                     const ConstParamList& params);

/// Reads values into `params` and returns the header JSON.
std::string load_parameters(const std::filesystem::path& path, const ParamList& params);

/// Header only, without touching parameters.
std::string read_parameter_header(const std::filesystem::path& path);

}  // namespace pam::num
