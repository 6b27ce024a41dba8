#pragma once

#include <optional>
#include <string>
#include <vector>

#include "offloadsim/assignment.hpp"
#include "offloadsim/model.hpp"

namespace offloadsim::io {

// Instance JSON, SI units throughout (bit/s, Hz, bits, seconds). Caps accept
// "inf". Nodes carry id, kind ("car"/"edge"), compute_hz, v2v_capable and a
// roles array; links are directional {src, dst, rate_bps}; task types refer
// to nodes by id.
std::optional<model::Instance> load_instance_json(const std::string& text,
                                                  std::vector<std::string>& errors);
std::string instance_to_json(const model::Instance& ins);

// Assignment JSON: worker/task-type id lists fix the matrix axes, then the
// x / y_lte / y_v2v / m matrices row by row. Loading validates the axes
// against the instance and re-derives l.
std::optional<assign::Assignment> load_assignment_json(const std::string& text,
                                                       const model::Instance& ins,
                                                       std::vector<std::string>& errors);
std::string assignment_to_json(const assign::Assignment& a, const model::Instance& ins);

std::optional<std::string> read_file(const std::string& path, std::vector<std::string>& errors);
bool write_file(const std::string& path, const std::string& content,
                std::vector<std::string>& errors);

}  // namespace offloadsim::io
