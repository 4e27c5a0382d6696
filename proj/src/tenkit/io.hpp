#pragma once

#include <filesystem>
#include <string>

#include "tenkit/netcon.hpp"
#include "tenkit/ttn.hpp"

namespace tenkit {

// Binary tensor file (.tnt): magic bytes 54 4E 54 01, one scalar-kind byte
// (0 real, 1 complex), u32 LE index count, that many u64 LE dimensions, then
// the elements as IEEE-754 LE doubles in row-major order (complex elements
// interleaved re, im). Round-trips are bit exact.
void save_tensor(const DenseTensor& t, const std::filesystem::path& path);
DenseTensor load_tensor(const std::filesystem::path& path);

// JSON network manifest. Tensor payloads live in .tnt files referenced by
// each entry's "source" field, resolved relative to the manifest's directory;
// save_network writes them next to the manifest. An optional "shape" entry is
// cross-checked against the loaded tensor, and an optional "sequence" carries
// a stored contraction plan.
Network load_network(const std::filesystem::path& manifest_path);
void save_network(const Network& net, const std::filesystem::path& manifest_path);

// Tree manifests additionally carry "center" and per-edge "center_ward"
// orientation annotations; orientations are re-derived on load and stale
// annotations are rejected.
TreeNetwork load_tree(const std::filesystem::path& manifest_path);
void save_tree(const TreeNetwork& tn, const std::filesystem::path& manifest_path);

// Nested-array plan form: a leaf is a tensor id, an internal node [left, right].
std::string tree_to_json(const ContractionTree& tree);
ContractionTree tree_from_json(const std::string& text);

}  // namespace tenkit
