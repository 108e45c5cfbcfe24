// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

/// \file
/// Plain-text configuration: one `key = value` per line, `#` starts a
/// comment, blank lines ignored.

#pragma once

#include <quadlab/training.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace quadlab {

/// Splits config text into (key, value) pairs in file order. `source`
/// names the input in error messages. Throws DataError on malformed lines.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text,
                                                                  const std::string& source);

/// Applies `text` on top of `base`. Unknown keys and bad values raise
/// DataError naming the key.
TrainConfig apply_train_config(const std::string& text, const std::string& source,
                               TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

}  // namespace quadlab
