#pragma once

#include "kandinsky/conformal.hpp"

#include <filesystem>
#include <string>

namespace kandinsky {

/// Writes model.json, curves.npy (float32, concatenated sorted scores),
/// curve_offsets.npy (int64, C + 1 offsets) and assignment.npy (uint16, or uint32 past
/// 65535 curves) into `dir`. `details` is embedded verbatim as JSON under "details".
void write_model(const CalibrationModel& model, const std::filesystem::path& dir,
                 const std::string& details = "{}");

/// Reads the artifact written by write_model; the result compares equal to the original.
CalibrationModel read_model(const std::filesystem::path& dir);

}  // namespace kandinsky
