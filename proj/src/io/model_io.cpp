#include "neuboots/io/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "neuboots/error.hpp"

namespace neuboots::io {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'N', 'E', 'U', 'B', 'O', 'O', 'T', 'S'};

enum class Kind : std::uint8_t { generator = 0, ensemble = 1, dropout = 2 };

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out_.write(reinterpret_cast<const char*>(bytes), sizeof(T));
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <class T>
  T get() {
    unsigned char bytes[sizeof(T)];
    in_.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (in_.gcount() != static_cast<std::streamsize>(sizeof(T))) throw DataError("model file is truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
  void raw(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) throw DataError("model file is truncated");
  }

 private:
  std::istream& in_;
};

// Upper bound on a single layer dimension read from disk.
constexpr std::uint32_t kMaxDim = 1u << 24;

void write_net(Writer& w, const nn::DenseNet& net) {
  w.put(static_cast<std::uint8_t>(net.head()));
  w.put(static_cast<std::uint32_t>(net.num_layers()));
  for (const auto& layer : net.layers()) {
    w.put(static_cast<std::uint32_t>(layer.in_dim()));
    w.put(static_cast<std::uint32_t>(layer.out_dim()));
    w.put(static_cast<std::uint8_t>(layer.activation));
    for (double v : layer.weight.flat()) w.put(v);
    for (double v : layer.bias) w.put(v);
  }
}

template <class E>
E checked_enum(std::uint8_t v, std::uint8_t max, const char* what) {
  if (v > max) throw DataError(std::string("model file has an invalid ") + what);
  return static_cast<E>(v);
}

nn::DenseNet read_net(Reader& r) {
  const auto head = checked_enum<nn::OutputHead>(r.get<std::uint8_t>(), 1, "output head");
  const auto count = r.get<std::uint32_t>();
  if (count == 0 || count > 4096) throw DataError("model file has an invalid layer count");
  std::vector<nn::DenseLayer> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto in = r.get<std::uint32_t>();
    const auto out = r.get<std::uint32_t>();
    if (in == 0 || out == 0 || in > kMaxDim || out > kMaxDim) {
      throw DataError("model file has an invalid layer shape");
    }
    nn::DenseLayer layer;
    layer.activation = checked_enum<nn::Activation>(r.get<std::uint8_t>(), 2, "activation");
    layer.weight = Matrix(out, in);
    for (double& v : layer.weight.flat()) v = r.get<double>();
    layer.bias.resize(out);
    for (double& v : layer.bias) v = r.get<double>();
    layers.push_back(std::move(layer));
  }
  try {
    return nn::DenseNet(std::move(layers), head);
  } catch (const DimensionError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

json net_to_json(const nn::DenseNet& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    layers.push_back({{"in", layer.in_dim()},
                      {"out", layer.out_dim()},
                      {"activation", nn::to_string(layer.activation)},
                      {"weight", std::vector<double>(layer.weight.flat().begin(), layer.weight.flat().end())},
                      {"bias", layer.bias}});
  }
  return {{"head", nn::to_string(net.head())}, {"layers", std::move(layers)}};
}

nn::DenseNet net_from_json(const json& j) {
  std::vector<nn::DenseLayer> layers;
  for (const auto& jl : j.at("layers")) {
    const auto in = jl.at("in").get<std::size_t>();
    const auto out = jl.at("out").get<std::size_t>();
    nn::DenseLayer layer;
    layer.activation = nn::parse_activation(jl.at("activation").get<std::string>());
    const auto w = jl.at("weight").get<std::vector<double>>();
    if (w.size() != in * out) throw DataError("model JSON: weight size does not match in*out");
    layer.weight = Matrix(out, in);
    std::copy(w.begin(), w.end(), layer.weight.flat().begin());
    layer.bias = jl.at("bias").get<std::vector<double>>();
    if (layer.bias.size() != out) throw DataError("model JSON: bias size does not match out");
    layers.push_back(std::move(layer));
  }
  if (layers.empty()) throw DataError("model JSON has no layers");
  try {
    return nn::DenseNet(std::move(layers), nn::parse_output_head(j.at("head").get<std::string>()));
  } catch (const DimensionError& e) {
    throw DataError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace

std::string model_kind(const Model& m) {
  switch (m.index()) {
    case 0: return "generator";
    case 1: return "ensemble";
    default: return "dropout";
  }
}

void write_model_binary(std::ostream& out, const Model& m) {
  Writer w(out);
  w.raw(kMagic, sizeof kMagic);
  w.put(kModelFormatVersion);
  std::uint8_t method = 0;
  std::uint64_t seed = 0;
  double p = 0.0;
  std::vector<const nn::DenseNet*> nets;
  Kind kind{};
  if (const auto* g = std::get_if<generator::GeneratorNet>(&m)) {
    kind = Kind::generator;
    seed = g->assignment_seed();
    nets.push_back(&g->net());
  } else if (const auto* e = std::get_if<baselines::EnsembleOfNets>(&m)) {
    kind = Kind::ensemble;
    method = static_cast<std::uint8_t>(e->method);
    for (const auto& net : e->members) nets.push_back(&net);
  } else {
    const auto& d = std::get<baselines::DropoutPredictor>(m);
    kind = Kind::dropout;
    p = d.p;
    nets.push_back(&d.net);
  }
  w.put(static_cast<std::uint8_t>(kind));
  w.put(method);
  w.put(seed);
  w.put(p);
  w.put(static_cast<std::uint32_t>(nets.size()));
  for (const auto* net : nets) write_net(w, *net);
  if (!out) throw DataError("failed writing model");
}

Model read_model_binary(std::istream& in) {
  Reader r(in);
  char magic[sizeof kMagic];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw DataError("not a model file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw DataError("unsupported model format version " + std::to_string(version));
  }
  const auto kind = checked_enum<Kind>(r.get<std::uint8_t>(), 2, "model kind");
  const auto method = checked_enum<baselines::MethodTag>(r.get<std::uint8_t>(), 2, "method tag");
  const auto seed = r.get<std::uint64_t>();
  const auto p = r.get<double>();
  const auto count = r.get<std::uint32_t>();
  if (count == 0 || (kind != Kind::ensemble && count != 1) || count > 100000) {
    throw DataError("model file has an invalid member count");
  }
  std::vector<nn::DenseNet> nets;
  for (std::uint32_t i = 0; i < count; ++i) nets.push_back(read_net(r));

  switch (kind) {
    case Kind::generator:
      if (nets.front().num_layers() < 2) throw DataError("generator model needs at least two layers");
      return generator::GeneratorNet(std::move(nets.front()), seed);
    case Kind::ensemble:
      return baselines::EnsembleOfNets{std::move(nets), method};
    case Kind::dropout:
      try {
        baselines::validate_dropout_rate(p);
      } catch (const ConfigError& e) {
        throw DataError(std::string("model file: ") + e.what());
      }
      return baselines::DropoutPredictor{std::move(nets.front()), p};
  }
  throw DataError("model file has an invalid model kind");
}

std::string model_to_json(const Model& m) {
  json j;
  j["format"] = "neuboots-model";
  j["format_version"] = kModelFormatVersion;
  j["kind"] = model_kind(m);
  if (const auto* g = std::get_if<generator::GeneratorNet>(&m)) {
    j["num_blocks"] = g->num_blocks();
    j["assignment_seed"] = g->assignment_seed();
    j["net"] = net_to_json(g->net());
  } else if (const auto* e = std::get_if<baselines::EnsembleOfNets>(&m)) {
    j["method_tag"] = baselines::to_string(e->method);
    j["members"] = json::array();
    for (const auto& net : e->members) j["members"].push_back(net_to_json(net));
  } else {
    const auto& d = std::get<baselines::DropoutPredictor>(m);
    j["dropout_p"] = d.p;
    j["net"] = net_to_json(d.net);
  }
  return j.dump(1);
}

Model model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "neuboots-model") throw DataError("not a model JSON file");
    if (j.at("format_version").get<std::uint32_t>() != kModelFormatVersion) {
      throw DataError("unsupported model format version");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "generator") {
      auto net = net_from_json(j.at("net"));
      if (net.num_layers() < 2) throw DataError("generator model needs at least two layers");
      return generator::GeneratorNet(std::move(net), j.at("assignment_seed").get<std::uint64_t>());
    }
    if (kind == "ensemble") {
      baselines::EnsembleOfNets e;
      e.method = baselines::parse_method_tag(j.at("method_tag").get<std::string>());
      for (const auto& jn : j.at("members")) e.members.push_back(net_from_json(jn));
      if (e.members.empty()) throw DataError("ensemble model has no members");
      return e;
    }
    if (kind == "dropout") {
      const double p = j.at("dropout_p").get<double>();
      baselines::validate_dropout_rate(p);
      return baselines::DropoutPredictor{net_from_json(j.at("net")), p};
    }
    throw DataError("unknown model kind \"" + kind + "\"");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& m) {
  if (path.extension() == ".json") {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << model_to_json(m) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_model_binary(out, m);
}

Model load_model(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_model_binary(in);
}

}  // namespace neuboots::io
