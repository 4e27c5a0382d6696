#include "tenkit/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tenkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr unsigned char kMagic[4] = {0x54, 0x4E, 0x54, 0x01};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;
constexpr std::uint32_t kMaxOrder = 4096;

void put_bytes(std::ostream& os, const unsigned char* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 8);
}

void put_f64(std::ostream& os, double d) {
  put_u64(os, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
  std::ifstream is;
  fs::path path;

  explicit Reader(const fs::path& p) : is(p, std::ios::binary), path(p) {
    if (!is) throw IoError("cannot open '" + p.string() + "' for reading");
  }
  void bytes(unsigned char* p, std::size_t n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n)) {
      throw IoError("'" + path.string() + "' is truncated");
    }
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool at_end() { return is.peek() == std::ifstream::traits_type::eof(); }
};

std::string sanitize_id(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "tensor" : out;
}

json tree_node_to_json(const ContractionTree& tree, int idx) {
  const auto& n = tree.nodes.at(static_cast<std::size_t>(idx));
  if (n.left < 0) return json(n.leaf_id);
  return json::array({tree_node_to_json(tree, n.left), tree_node_to_json(tree, n.right)});
}

int tree_node_from_json(const json& j, ContractionTree& tree) {
  if (j.is_string()) {
    ContractionTree::Node n;
    n.leaf_id = j.get<std::string>();
    tree.nodes.push_back(std::move(n));
    return static_cast<int>(tree.nodes.size() - 1);
  }
  if (j.is_array() && j.size() == 2) {
    const int left = tree_node_from_json(j[0], tree);
    const int right = tree_node_from_json(j[1], tree);
    ContractionTree::Node n;
    n.left = left;
    n.right = right;
    tree.nodes.push_back(std::move(n));
    return static_cast<int>(tree.nodes.size() - 1);
  }
  throw IoError(
      "malformed sequence: every node must be a tensor id or a pair of nodes");
}

json load_manifest_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw IoError("'" + path.string() + "': manifest must be an object");
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != 1) {
    throw IoError("'" + path.string() + "': unsupported manifest version");
  }
  return j;
}

Network network_from_json(const json& j, const fs::path& dir, const fs::path& path) {
  if (!j.contains("tensors") || !j["tensors"].is_array()) {
    throw IoError("'" + path.string() + "': manifest lacks a tensors array");
  }
  Network net;
  for (const json& tj : j["tensors"]) {
    if (!tj.is_object() || !tj.contains("id") || !tj["id"].is_string() ||
        !tj.contains("labels") || !tj["labels"].is_array() || !tj.contains("source") ||
        !tj["source"].is_string()) {
      throw IoError("'" + path.string() +
                    "': each tensor entry needs id, labels and source fields");
    }
    const std::string id = tj["id"].get<std::string>();
    std::vector<int> labels;
    for (const json& l : tj["labels"]) {
      if (!l.is_number_integer()) {
        throw IoError("'" + path.string() + "': labels must be integers");
      }
      labels.push_back(l.get<int>());
    }
    DenseTensor t = load_tensor(dir / tj["source"].get<std::string>());
    if (tj.contains("shape")) {
      Shape expect;
      for (const json& d : tj["shape"]) expect.push_back(d.get<std::size_t>());
      if (expect != t.shape()) {
        throw ValidationError("manifest shape for tensor '" + id +
                              "' does not match its data file");
      }
    }
    net.add(id, std::move(labels), std::move(t));
  }

  if (j.contains("sequence")) {
    ContractionTree tree;
    tree.root = tree_node_from_json(j["sequence"], tree);
    auto ids = tree.leaf_ids();
    std::vector<std::string> net_ids;
    for (const auto& s : net.slots()) net_ids.push_back(s.id);
    std::sort(ids.begin(), ids.end());
    std::sort(net_ids.begin(), net_ids.end());
    if (ids != net_ids) {
      throw ValidationError(
          "manifest sequence does not reference each tensor exactly once");
    }
    net.sequence = std::move(tree);
  }
  return net;
}

json network_to_json(const Network& net, const fs::path& dir) {
  fs::create_directories(dir);
  json j;
  j["version"] = 1;
  j["tensors"] = json::array();
  std::set<std::string> taken;
  for (const auto& s : net.slots()) {
    std::string base = sanitize_id(s.id);
    std::string name = base + ".tnt";
    for (int k = 2; taken.count(name); ++k) {
      name = base + "_" + std::to_string(k) + ".tnt";
    }
    taken.insert(name);
    save_tensor(s.tensor, dir / name);

    json tj;
    tj["id"] = s.id;
    tj["labels"] = s.labels;
    tj["shape"] = s.tensor.shape();
    tj["source"] = name;
    j["tensors"].push_back(std::move(tj));
  }
  if (net.sequence && !net.sequence->empty()) {
    j["sequence"] = tree_node_to_json(*net.sequence, net.sequence->root);
  }
  return j;
}

void write_manifest(const json& j, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

void save_tensor(const DenseTensor& t, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");

  put_bytes(os, kMagic, 4);
  const unsigned char code = t.is_real() ? 0 : 1;
  put_bytes(os, &code, 1);
  put_u32(os, static_cast<std::uint32_t>(t.order()));
  for (std::size_t d : t.shape()) put_u64(os, d);
  if (t.is_real()) {
    for (double v : t.real_data()) put_f64(os, v);
  } else {
    for (const Complex& v : t.complex_data()) {
      put_f64(os, v.real());
      put_f64(os, v.imag());
    }
  }
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

DenseTensor load_tensor(const fs::path& path) {
  Reader r(path);
  unsigned char magic[4];
  r.bytes(magic, 4);
  for (int i = 0; i < 4; ++i) {
    if (magic[i] != kMagic[i]) {
      throw IoError("'" + path.string() + "' is not a tensor file (bad magic)");
    }
  }
  unsigned char code = 0;
  r.bytes(&code, 1);
  if (code > 1) {
    throw IoError("'" + path.string() + "' has an unknown scalar kind");
  }
  const std::uint32_t order = r.u32();
  if (order > kMaxOrder) {
    throw IoError("'" + path.string() + "' declares an implausible index count");
  }
  Shape shape(order);
  std::uint64_t total = 1;
  for (auto& d : shape) {
    d = r.u64();
    if (d == 0) throw IoError("'" + path.string() + "' declares a zero dimension");
    if (d > kMaxElements / total) {
      throw IoError("'" + path.string() + "' declares too many elements");
    }
    total *= d;
  }

  DenseTensor t;
  if (code == 0) {
    std::vector<double> data(total);
    for (auto& v : data) v = r.f64();
    t = DenseTensor::from_real(std::move(shape), std::move(data));
  } else {
    std::vector<Complex> data(total);
    for (auto& v : data) {
      const double re = r.f64();
      const double im = r.f64();
      v = Complex(re, im);
    }
    t = DenseTensor::from_complex(std::move(shape), std::move(data));
  }
  if (!r.at_end()) {
    throw IoError("'" + path.string() + "' carries trailing data");
  }
  return t;
}

Network load_network(const fs::path& manifest_path) {
  const json j = load_manifest_json(manifest_path);
  return network_from_json(j, manifest_path.parent_path(), manifest_path);
}

void save_network(const Network& net, const fs::path& manifest_path) {
  write_manifest(network_to_json(net, manifest_path.parent_path()), manifest_path);
}

TreeNetwork load_tree(const fs::path& manifest_path) {
  const json j = load_manifest_json(manifest_path);
  const Network net =
      network_from_json(j, manifest_path.parent_path(), manifest_path);
  TreeNetwork tn = TreeNetwork::build(net);

  if (j.contains("center")) {
    if (!j["center"].is_string()) {
      throw IoError("'" + manifest_path.string() + "': center must be a tensor id");
    }
    tn = tn.with_center(j["center"].get<std::string>());
  }
  if (j.contains("edges")) {
    if (!tn.center()) {
      throw ValidationError("manifest carries edge orientations but no center");
    }
    for (const json& ej : j["edges"]) {
      const int label = ej.at("label").get<int>();
      const std::string toward = ej.at("center_ward").get<std::string>();
      const std::string derived = tn.centerward(label, *tn.center());
      if (derived != toward) {
        std::ostringstream os;
        os << "stale orientation for edge " << label << ": manifest says '" << toward
           << "' but the tree derives '" << derived << "'";
        throw ValidationError(os.str());
      }
    }
  }
  return tn;
}

void save_tree(const TreeNetwork& tn, const fs::path& manifest_path) {
  json j = network_to_json(tn.network(), manifest_path.parent_path());
  if (tn.center()) {
    j["center"] = *tn.center();
    j["edges"] = json::array();
    for (const TreeEdge& e : tn.edges()) {
      json ej;
      ej["label"] = e.label;
      ej["center_ward"] = tn.centerward(e.label, *tn.center());
      j["edges"].push_back(std::move(ej));
    }
  }
  write_manifest(j, manifest_path);
}

std::string tree_to_json(const ContractionTree& tree) {
  if (tree.empty()) throw ValidationError("cannot serialize an empty tree");
  return tree_node_to_json(tree, tree.root).dump();
}

ContractionTree tree_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("sequence is not valid JSON: ") + e.what());
  }
  ContractionTree tree;
  tree.root = tree_node_from_json(j, tree);
  return tree;
}

}  // namespace tenkit
