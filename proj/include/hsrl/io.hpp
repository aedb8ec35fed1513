#pragma once

// Map and instance file formats: the '.#SG' text grid and the JSON schemas
// for grid maps, Blocksworld instances and GTB maps.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hsrl/envs.hpp"

namespace hsrl {

/// Parses a rectangular grid of '.', '#', 'S', 'G' (exactly one S and one G).
/// Throws ParseError with a 1-based line/column on malformed input.
GridMap parse_grid_text(std::string_view text);

/// Canonical rendering: rows joined by '\n', no trailing newline.
std::string serialize_grid(const GridMap& map);

struct BlocksInstance
{
    BlocksState initial;
    BlocksState goal;

    bool operator==(const BlocksInstance&) const = default;
};

nlohmann::json grid_to_json(const GridMap& map);
GridMap grid_from_json(const nlohmann::json& j);

nlohmann::json blocks_to_json(const BlocksInstance& inst);
BlocksInstance blocks_from_json(const nlohmann::json& j);

nlohmann::json gtb_to_json(const GtbMap& map);
GtbMap gtb_from_json(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Loads a grid map from a .json or text-grid file.
GridMap load_grid(const std::filesystem::path& path);

}  // namespace hsrl
