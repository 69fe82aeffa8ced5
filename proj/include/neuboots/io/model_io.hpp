#pragma once

// Model files. Binary layout (little-endian):
//   "NEUBOOTS" | u32 format version | u8 kind | u8 method tag | u64 assignment seed
//   | f64 dropout p | u32 member count | members...
// Each member: u8 output head | u32 layer count | per layer: u32 in, u32 out,
//   u8 activation, out*in f64 weights (row-major), out f64 biases.
// The binary round trip is bit-exact. The JSON form stores the same fields,
// with doubles written in shortest round-trip form.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "neuboots/baselines/baselines.hpp"
#include "neuboots/generator/generator.hpp"

namespace neuboots::io {

inline constexpr std::uint32_t kModelFormatVersion = 1;

using Model = std::variant<generator::GeneratorNet, baselines::EnsembleOfNets, baselines::DropoutPredictor>;

std::string model_kind(const Model& m);

void write_model_binary(std::ostream& out, const Model& m);
Model read_model_binary(std::istream& in);

std::string model_to_json(const Model& m);
Model model_from_json(const std::string& text);

// Format chosen by extension: ".json" is JSON, anything else binary.
void save_model(const std::filesystem::path& path, const Model& m);
Model load_model(const std::filesystem::path& path);

}  // namespace neuboots::io
