#pragma once

#include "cuqds/conformal.hpp"

#include <filesystem>
#include <vector>

namespace cuqds {

// Line-delimited audit log mirroring StreamRecord. Non-finite scalars (the
// split-CP +infinity sentinel) are encoded as strings and restored exactly.
void write_records(const std::vector<StreamRecord>& records,
                   const std::filesystem::path& path);
std::vector<StreamRecord> read_records(const std::filesystem::path& path);

}  // namespace cuqds
