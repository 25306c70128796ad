#include "cnnabs/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace cnnabs {

using nlohmann::json;

std::string formatDouble(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return {buf, end};
}

namespace {

void checkVersion(const json& j, const char* what) {
  if (!j.is_object()) throw StructuralError(std::string(what) + ": expected a JSON object");
  const int v = j.value("format_version", 0);
  if (v != kFormatVersion) {
    throw StructuralError(std::string(what) + ": unsupported format_version " + std::to_string(v));
  }
}

json affineToJson(const SparseAffine& a) {
  json triples = json::array();
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    for (const Term& t : a.rows[r]) triples.push_back({r, t.source, t.weight});
  }
  return triples;
}

SparseAffine affineFromJson(const json& layer, std::size_t rows) {
  SparseAffine a;
  a.rows.resize(rows);
  for (const json& t : layer.at("weights")) {
    if (!t.is_array() || t.size() != 3) throw StructuralError("weights must be [row, col, value] triples");
    const auto r = t[0].get<std::size_t>();
    if (r >= rows) throw StructuralError("weight row " + std::to_string(r) + " out of range");
    a.rows[r].push_back({t[1].get<std::size_t>(), t[2].get<double>()});
  }
  a.bias = layer.at("biases").get<std::vector<double>>();
  return a;
}

std::ifstream openInput(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream openOutput(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in = openInput(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw StructuralError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void writeJsonFile(const std::filesystem::path& path, const json& j) {
  std::ofstream out = openOutput(path);
  out << j.dump(2) << '\n';
}

json networkToJson(const Network& net) {
  json layers = json::array();
  for (std::size_t i = 1; i < net.layerCount(); ++i) {
    const Layer& l = net.layer(i);
    json jl{{"kind", toString(l.kind)}, {"shape", l.shape.dims()}};
    switch (l.kind) {
      case LayerKind::Convolution:
        if (l.isKernelConvolution()) {
          jl["kernel"] = l.kernel;
          jl["bias"] = l.kernelBias;
          break;
        }
        [[fallthrough]];
      case LayerKind::WeightedSum:
      case LayerKind::Output:
        jl["weights"] = affineToJson(l.affine);
        jl["biases"] = l.affine.bias;
        break;
      case LayerKind::MaxPool:
        jl["pool_size"] = l.poolSize;
        break;
      case LayerKind::Relu:
      case LayerKind::Input:
        break;
    }
    layers.push_back(std::move(jl));
  }
  return {{"format_version", kFormatVersion},
          {"name", net.name()},
          {"input_shape", net.layer(0).shape.dims()},
          {"layers", std::move(layers)}};
}

Network networkFromJson(const json& j) {
  checkVersion(j, "network");
  try {
    std::vector<Layer> layers{Layer::input(LayerShape(j.at("input_shape").get<std::vector<std::size_t>>()))};
    for (const json& jl : j.at("layers")) {
      const LayerKind kind = parseLayerKind(jl.at("kind").get<std::string>());
      LayerShape shape(jl.at("shape").get<std::vector<std::size_t>>());
      switch (kind) {
        case LayerKind::Input:
          throw StructuralError("the input layer is given by input_shape");
        case LayerKind::WeightedSum:
          layers.push_back(Layer::weightedSum(shape, affineFromJson(jl, shape.size())));
          break;
        case LayerKind::Output:
          layers.push_back(Layer::output(shape, affineFromJson(jl, shape.size())));
          break;
        case LayerKind::Convolution:
          if (jl.contains("kernel")) {
            layers.push_back(
                Layer::convolution(shape, jl.at("kernel").get<std::vector<double>>(), jl.at("bias").get<double>()));
          } else {
            layers.push_back(Layer::loweredConvolution(shape, affineFromJson(jl, shape.size())));
          }
          break;
        case LayerKind::Relu:
          layers.push_back(Layer::relu(shape));
          break;
        case LayerKind::MaxPool:
          layers.push_back(Layer::maxPool(shape, jl.at("pool_size").get<std::size_t>()));
          break;
      }
    }
    return Network(j.value("name", std::string("network")), std::move(layers));
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed network: ") + e.what());
  }
}

Network loadNetwork(const std::filesystem::path& path) { return networkFromJson(readJsonFile(path)); }

void saveNetwork(const Network& net, const std::filesystem::path& path) { writeJsonFile(path, networkToJson(net)); }

TestSet readDataset(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "cnnabs-dataset") throw StructuralError("not a cnnabs dataset");
  if (version != kFormatVersion) throw StructuralError("unsupported dataset version " + std::to_string(version));
  std::size_t count = 0, features = 0;
  if (!(in >> count >> features)) throw StructuralError("dataset header lacks count and feature size");
  TestSet data;
  data.samples.reserve(count);
  std::string token;
  auto readNumber = [&](double& v) {
    if (!(in >> token)) throw StructuralError("dataset ended early");
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw StructuralError("bad number '" + token + "' in dataset");
    }
  };
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t label = 0;
    if (!(in >> label)) throw StructuralError("dataset ended early");
    std::vector<double> row(features);
    for (double& v : row) readNumber(v);
    data.labels.push_back(label);
    data.labelCount = std::max(data.labelCount, label + 1);
    data.samples.push_back(std::move(row));
  }
  return data;
}

void writeDataset(std::ostream& out, const TestSet& data) {
  const std::size_t features = data.samples.empty() ? 0 : data.samples.front().size();
  out << "cnnabs-dataset " << kFormatVersion << '\n' << data.size() << ' ' << features << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.samples[i]) out << ' ' << formatDouble(v);
    out << '\n';
  }
}

TestSet loadDataset(const std::filesystem::path& path) {
  std::ifstream in = openInput(path);
  return readDataset(in);
}

void saveDataset(const TestSet& data, const std::filesystem::path& path) {
  std::ofstream out = openOutput(path);
  writeDataset(out, data);
}

std::vector<OutputConstraint> outputConstraintsFromJson(const json& j) {
  std::vector<OutputConstraint> out;
  for (const json& c : j) {
    OutputConstraint le;
    for (const json& t : c.at("terms")) le.terms.push_back({t.at(0).get<std::size_t>(), t.at(1).get<double>()});
    const double rhs = c.at("rhs").get<double>();
    const std::string rel = c.at("relation").get<std::string>();
    le.constant = -rhs;
    OutputConstraint ge;
    for (const Term& t : le.terms) ge.terms.push_back({t.source, -t.weight});
    ge.constant = rhs;
    if (rel == "<=") {
      out.push_back(std::move(le));
    } else if (rel == ">=") {
      out.push_back(std::move(ge));
    } else if (rel == "=") {
      out.push_back(std::move(le));
      out.push_back(std::move(ge));
    } else {
      throw StructuralError("unknown relation '" + rel + "'");
    }
  }
  return out;
}

json outputConstraintsToJson(const std::vector<OutputConstraint>& constraints) {
  json out = json::array();
  for (const OutputConstraint& c : constraints) {
    json terms = json::array();
    for (const Term& t : c.terms) terms.push_back({t.source, t.weight});
    out.push_back({{"terms", terms}, {"relation", "<="}, {"rhs", -c.constant}});
  }
  return out;
}

QueryFile loadQuery(const std::filesystem::path& path) {
  const json j = readJsonFile(path);
  checkVersion(j, "query");
  const std::filesystem::path dir = path.parent_path();
  QueryFile qf;
  try {
    if (j.contains("adversarial")) {
      const json& a = j.at("adversarial");
      auto net = std::make_shared<const Network>(loadNetwork(dir / a.at("model").get<std::string>()));
      TestSet data = loadDataset(dir / a.at("dataset").get<std::string>());
      const auto index = a.at("sample_index").get<std::size_t>();
      if (index >= data.size()) throw StructuralError("sample index " + std::to_string(index) + " out of range");
      InputDomain domain;
      if (a.contains("domain")) domain = {a["domain"].at(0).get<double>(), a["domain"].at(1).get<double>()};
      qf.query = buildAdversarial(*net, data.samples[index], a.at("eps").get<double>(), domain);
      qf.x0 = data.samples[index];
      if (a.contains("policy")) qf.policy = parsePolicy(a["policy"].get<std::string>());
      qf.network = std::move(net);
      qf.dataset = std::move(data);
    } else {
      auto net = std::make_shared<const Network>(loadNetwork(dir / j.at("network").get<std::string>()));
      qf.query.network = std::make_shared<const NeuronGraph>(NeuronGraph::fromNetwork(*net));
      for (const json& b : j.at("input_bounds")) qf.query.inputBox.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
      qf.query.outputConstraints = outputConstraintsFromJson(j.at("output_constraints"));
      if (j.contains("dataset")) qf.dataset = loadDataset(dir / j["dataset"].get<std::string>());
      if (j.contains("policy")) qf.policy = parsePolicy(j["policy"].get<std::string>());
      qf.network = std::move(net);
    }
  } catch (const json::exception& e) {
    throw StructuralError("malformed query '" + path.string() + "': " + e.what());
  }
  qf.query.validate();
  if (qf.dataset) qf.dataset->validate(qf.network->inputSize());
  return qf;
}

void saveQuery(const std::filesystem::path& path, const std::string& networkPath, const VerificationQuery& query,
               const std::optional<std::string>& datasetPath) {
  json bounds = json::array();
  for (const Interval& b : query.inputBox) bounds.push_back({b.lower, b.upper});
  json j{{"format_version", kFormatVersion},
         {"network", networkPath},
         {"input_bounds", bounds},
         {"output_constraints", outputConstraintsToJson(query.outputConstraints)}};
  if (datasetPath) j["dataset"] = *datasetPath;
  writeJsonFile(path, j);
}

void writeBoundsDump(std::ostream& out, const NeuronGraph& graph, const BoundsMap& bounds) {
  out << "# node layer index lower upper\n";
  for (NodeId id = 0; id < graph.size(); ++id) {
    const NeuronRef& o = graph.node(id).origin;
    out << id << ' ' << o.layer << ' ' << o.index << ' ' << formatDouble(bounds[id].lower) << ' '
        << formatDouble(bounds[id].upper) << '\n';
  }
}

}  // namespace cnnabs
