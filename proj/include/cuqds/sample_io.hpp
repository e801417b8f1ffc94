#pragma once

#include "cuqds/types.hpp"

#include <filesystem>

namespace cuqds {

// Line-delimited records, one sample per line:
//   {"id": "...", "t": 12, "obs": [[...], ...], "fut": [[...], ...]}
// Round-trips are lossless for finite values. An empty file is an empty
// dataset, not an error.
Dataset read_samples(const std::filesystem::path& path, DatasetRole role);
void write_samples(const Dataset& ds, const std::filesystem::path& path);

}  // namespace cuqds
