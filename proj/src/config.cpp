// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include <quadlab/config.hpp>

#include <quadlab/error.hpp>
#include <quadlab/io.hpp>

#include <sstream>
#include <stdexcept>

namespace quadlab {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text,
                                                                  const std::string& source)
{
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
        if (key.empty())
            throw DataError(source + ":" + std::to_string(lineno) + ": expected key = value");
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

TrainConfig apply_train_config(const std::string& text, const std::string& source,
                               TrainConfig base)
{
    for (const auto& [key, value] : parse_key_values(text, source)) {
        bool known = false;
        try {
            known = base.set(key, value);
        } catch (const std::invalid_argument& e) {
            throw DataError(source + ": " + e.what());
        }
        if (!known)
            throw DataError(source + ": unknown config key '" + key + "'");
    }
    return base;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base)
{
    return apply_train_config(read_file(path), path.string(), std::move(base));
}

}  // namespace quadlab
