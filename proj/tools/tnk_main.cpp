// tnk: batch front end over the tenkit C API.
//
// Every subcommand writes a single-line JSON run report as the last line of
// stdout (norm excepted, which prints the bare value) and a human summary to
// stderr. Exit codes: 0 success, 1 validation or I/O failure, 2 numerical
// failure.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tenkit/tenkit.h"

namespace {

using nlohmann::json;

// ---- handle and string RAII over the C API ----

struct StringDel {
  void operator()(char* s) const { tnk_string_free(s); }
};
using Str = std::unique_ptr<char, StringDel>;

struct TensorDel {
  void operator()(tnk_tensor* t) const { tnk_tensor_free(t); }
};
using TensorPtr = std::unique_ptr<tnk_tensor, TensorDel>;

struct NetworkDel {
  void operator()(tnk_network* n) const { tnk_network_free(n); }
};
using NetworkPtr = std::unique_ptr<tnk_network, NetworkDel>;

struct TreeDel {
  void operator()(tnk_tree* t) const { tnk_tree_free(t); }
};
using TreePtr = std::unique_ptr<tnk_tree, TreeDel>;

struct FactorizationDel {
  void operator()(tnk_factorization* f) const { tnk_factorization_free(f); }
};
using FactorizationPtr = std::unique_ptr<tnk_factorization, FactorizationDel>;

struct TtnDel {
  void operator()(tnk_ttn* t) const { tnk_ttn_free(t); }
};
using TtnPtr = std::unique_ptr<tnk_ttn, TtnDel>;

// A failed API call, carrying the mapped exit code and the library message.
struct CliError {
  int exit_code;
  std::string message;
};

int exit_code_of(tnk_status s) {
  switch (s) {
    case TNK_OK:
      return 0;
    case TNK_ERROR_NUMERICAL:
    case TNK_ERROR_OVERFLOW:
      return 2;
    default:
      return 1;
  }
}

void check(tnk_status s) {
  if (s != TNK_OK) throw CliError{exit_code_of(s), tnk_last_error()};
}

// ---- report plumbing ----

struct Reporter {
  json report;
  std::string report_path;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit Reporter(const std::string& command_echo) {
    report["command"] = command_echo;
  }

  void emit(int exit_status) {
    report["exit_status"] = exit_status;
    report["timing_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    std::string line = report.dump();
    std::printf("%s\n", line.c_str());
    if (!report_path.empty()) {
      std::ofstream out(report_path, std::ios::trunc);
      out << line << "\n";
    }
  }
};

std::string join_args(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

json parse_owned_json(Str s) { return json::parse(s.get()); }

// ---- shared loaders ----

NetworkPtr load_network(const std::string& path) {
  tnk_network* raw = nullptr;
  check(tnk_network_load(path.c_str(), &raw));
  return NetworkPtr(raw);
}

TtnPtr load_ttn(const std::string& path) {
  tnk_ttn* raw = nullptr;
  check(tnk_ttn_load(path.c_str(), &raw));
  return TtnPtr(raw);
}

TensorPtr load_tensor(const std::string& path) {
  tnk_tensor* raw = nullptr;
  check(tnk_tensor_load(path.c_str(), &raw));
  return TensorPtr(raw);
}

bool parse_axis_list(const std::string& text, std::vector<uint32_t>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string tok =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      return false;
    out.push_back(static_cast<uint32_t>(std::stoul(tok)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return !out.empty();
}

// "i,j/k,l": row axes before the slash, column axes after.
void parse_partition(const std::string& text, std::vector<uint32_t>& rows,
                     std::vector<uint32_t>& cols) {
  std::size_t slash = text.find('/');
  if (slash == std::string::npos || !parse_axis_list(text.substr(0, slash), rows) ||
      !parse_axis_list(text.substr(slash + 1), cols)) {
    throw CliError{1, "bad partition '" + text + "': expected row,axes/col,axes"};
  }
}

// ---- subcommand payloads (throw CliError on failure) ----

struct ContractArgs {
  std::string manifest;
  std::string sequence_mode = "auto";
  std::string out_path;
};

void run_contract(const ContractArgs& a, Reporter& rep) {
  NetworkPtr net = load_network(a.manifest);
  TreePtr tree;
  if (a.sequence_mode == "greedy") {
    tnk_tree* raw = nullptr;
    check(tnk_search_sequence(net.get(), 1, &raw));
    tree.reset(raw);
  } else if (a.sequence_mode.rfind("file:", 0) == 0) {
    std::ifstream in(a.sequence_mode.substr(5));
    if (!in) throw CliError{1, "cannot read sequence file " + a.sequence_mode.substr(5)};
    std::stringstream buf;
    buf << in.rdbuf();
    tnk_tree* raw = nullptr;
    check(tnk_tree_from_json(buf.str().c_str(), &raw));
    tree.reset(raw);
  } else if (a.sequence_mode != "auto") {
    throw CliError{1, "unknown --sequence mode '" + a.sequence_mode +
                          "': expected auto, greedy or file:<path>"};
  }

  tnk_tensor* value_raw = nullptr;
  char* report_raw = nullptr;
  check(tnk_network_contract(net.get(), tree.get(), &value_raw, &report_raw));
  TensorPtr value(value_raw);
  json contraction = parse_owned_json(Str(report_raw));

  rep.report["sequence_mode"] = a.sequence_mode;
  rep.report["steps"] = contraction["steps"];
  rep.report["total_cost"] = contraction["total_cost"];
  rep.report["tree"] = contraction["tree"];
  if (!a.out_path.empty()) {
    check(tnk_tensor_save(value.get(), a.out_path.c_str()));
    rep.report["output"] = a.out_path;
  }

  uint32_t n = 0;
  tnk_network_size(net.get(), &n);
  note("contracted %u tensors, total cost %llu", n,
       static_cast<unsigned long long>(contraction["total_cost"].get<uint64_t>()));
}

struct SequenceArgs {
  std::string manifest;
  std::string method = "dp";
  std::string out_path;
};

void run_sequence(const SequenceArgs& a, Reporter& rep) {
  if (a.method != "dp" && a.method != "greedy")
    throw CliError{1, "unknown --method '" + a.method + "': expected dp or greedy"};
  NetworkPtr net = load_network(a.manifest);
  tnk_tree* raw = nullptr;
  check(tnk_search_sequence(net.get(), a.method == "greedy" ? 1 : 0, &raw));
  TreePtr tree(raw);

  char* tree_text_raw = nullptr;
  check(tnk_tree_to_json(tree.get(), &tree_text_raw));
  Str tree_text(tree_text_raw);
  uint64_t cost = 0;
  int has_costs = 0;
  check(tnk_tree_total_cost(tree.get(), &has_costs, &cost));

  rep.report["method"] = a.method;
  rep.report["tree"] = json::parse(tree_text.get());
  rep.report["total_cost"] = cost;
  if (!a.out_path.empty()) {
    std::ofstream out(a.out_path, std::ios::trunc);
    if (!out) throw CliError{1, "cannot write " + a.out_path};
    out << tree_text.get() << "\n";
    rep.report["output"] = a.out_path;
  }
  note("tree %s", tree_text.get());
  note("cost %llu", static_cast<unsigned long long>(cost));
}

struct DecompArgs {
  std::string tensor_path;
  std::string kind;
  std::string partition;
  int64_t rank = -1;
  double tol = -1.0;
  std::string prefix;
};

void run_decomp(const DecompArgs& a, Reporter& rep) {
  tnk_factor_kind kind;
  std::vector<std::string> suffixes;
  if (a.kind == "svd") {
    kind = TNK_FACTOR_SVD;
    suffixes = {"U", "S", "V"};
  } else if (a.kind == "qr") {
    kind = TNK_FACTOR_QR;
    suffixes = {"Q", "R"};
  } else if (a.kind == "eig") {
    kind = TNK_FACTOR_SPECTRAL;
    suffixes = {"U", "D"};
  } else {
    throw CliError{1, "unknown --kind '" + a.kind + "': expected svd, qr or eig"};
  }

  std::vector<uint32_t> rows, cols;
  parse_partition(a.partition, rows, cols);
  TensorPtr t = load_tensor(a.tensor_path);

  tnk_factorization* raw = nullptr;
  check(tnk_decompose(t.get(), kind, rows.data(), static_cast<uint32_t>(rows.size()),
                      cols.data(), static_cast<uint32_t>(cols.size()), &raw));
  FactorizationPtr f(raw);

  if (a.rank >= 0) {
    tnk_factorization* cut = nullptr;
    check(tnk_factor_truncate(f.get(), static_cast<uint64_t>(a.rank), &cut));
    f.reset(cut);
  } else if (a.tol >= 0) {
    tnk_factorization* cut = nullptr;
    check(tnk_factor_truncate_by_tolerance(f.get(), a.tol, &cut));
    f.reset(cut);
  }

  std::string prefix = a.prefix;
  if (prefix.empty()) {
    prefix = a.tensor_path;
    if (prefix.size() > 4 && prefix.substr(prefix.size() - 4) == ".tnt")
      prefix.resize(prefix.size() - 4);
  }

  json files = json::object();
  for (std::size_t i = 0; i < suffixes.size(); ++i) {
    tnk_tensor* factor_raw = nullptr;
    check(tnk_factor_get(f.get(), static_cast<uint32_t>(i), &factor_raw));
    TensorPtr factor(factor_raw);
    std::string path = prefix + "." + suffixes[i] + ".tnt";
    check(tnk_tensor_save(factor.get(), path.c_str()));
    files[suffixes[i]] = path;
  }

  uint64_t count = 0;
  check(tnk_factor_spectrum(f.get(), nullptr, 0, &count));
  std::vector<double> spectrum(count);
  check(tnk_factor_spectrum(f.get(), spectrum.data(), count, &count));

  rep.report["kind"] = a.kind;
  rep.report["partition"] = a.partition;
  rep.report["factors"] = files;
  rep.report["spectrum"] = spectrum;
  if (a.kind == "eig") {
    check(tnk_factor_eigenvalues(f.get(), nullptr, 0, &count));
    std::vector<double> eigenvalues(count);
    check(tnk_factor_eigenvalues(f.get(), eigenvalues.data(), count, &count));
    rep.report["eigenvalues"] = eigenvalues;
  }
  if (a.rank >= 0 || a.tol >= 0) {
    uint64_t kept = 0;
    double weight = 0, error = 0;
    int degenerate = 0;
    check(tnk_factor_truncation_info(f.get(), &kept, &weight, &error, &degenerate));
    rep.report["rank"] = kept;
    rep.report["discarded_weight"] = weight;
    rep.report["error"] = error;
    rep.report["degenerate_boundary"] = degenerate != 0;
    if (a.tol >= 0) rep.report["tol"] = a.tol;
  }
  note("%s factors written with prefix %s", a.kind.c_str(), prefix.c_str());
}

struct OrthogonalizeArgs {
  std::string manifest;
  std::string center;
  std::string method = "pull";
  std::string out_path;
  double tol = -1.0;
};

json verify_json(tnk_ttn* tn, const char* center, double tol, int* pass_out) {
  int pass = 0;
  char* raw = nullptr;
  check(tnk_ttn_verify_center(tn, center, tol, &pass, &raw));
  if (pass_out) *pass_out = pass;
  return parse_owned_json(Str(raw));
}

void run_orthogonalize(const OrthogonalizeArgs& a, Reporter& rep) {
  if (a.method != "pull" && a.method != "direct")
    throw CliError{1, "unknown --method '" + a.method + "': expected pull or direct"};
  TtnPtr tn = load_ttn(a.manifest);

  tnk_ttn* out_raw = nullptr;
  char* report_raw = nullptr;
  check(tnk_ttn_orthogonalize(tn.get(), a.center.c_str(), a.method == "direct" ? 1 : 0,
                              &out_raw, &report_raw));
  TtnPtr centered(out_raw);
  json branches = parse_owned_json(Str(report_raw));

  json verification = verify_json(centered.get(), nullptr, a.tol, nullptr);
  check(tnk_ttn_save(centered.get(), a.out_path.c_str()));

  rep.report["center"] = a.center;
  rep.report["method"] = a.method;
  rep.report["branches"] = branches["branches"];
  rep.report["verify"] = verification;
  rep.report["output"] = a.out_path;
  note("centered on %s via %s, max deviation %.3g", a.center.c_str(), a.method.c_str(),
       verification["max_deviation"].get<double>());
}

struct TruncateArgs {
  std::string manifest;
  std::string center;
  std::string partition;
  std::string method = "direct";
  int64_t rank = -1;
  double tol = -1.0;
  bool verify_global = false;
  std::string out_path;
};

void run_truncate(const TruncateArgs& a, Reporter& rep) {
  if (a.method != "pull" && a.method != "direct")
    throw CliError{1, "unknown --method '" + a.method + "': expected pull or direct"};
  if (a.rank < 0 && a.tol < 0) throw CliError{1, "one of --rank or --tol is required"};
  std::vector<uint32_t> rows, cols;
  parse_partition(a.partition, rows, cols);

  TtnPtr tn = load_ttn(a.manifest);
  tnk_ttn* centered_raw = nullptr;
  check(tnk_ttn_orthogonalize(tn.get(), a.center.c_str(), a.method == "direct" ? 1 : 0,
                              &centered_raw, nullptr));
  TtnPtr centered(centered_raw);

  tnk_ttn* cut_raw = nullptr;
  char* report_raw = nullptr;
  check(tnk_ttn_truncate_center(centered.get(), rows.data(),
                                static_cast<uint32_t>(rows.size()), cols.data(),
                                static_cast<uint32_t>(cols.size()),
                                a.rank >= 0 ? static_cast<uint64_t>(a.rank) : 0,
                                a.tol >= 0 ? a.tol : 0.0, a.verify_global ? 1 : 0,
                                &cut_raw, &report_raw));
  TtnPtr cut(cut_raw);
  json truncation = parse_owned_json(Str(report_raw));

  check(tnk_ttn_save(cut.get(), a.out_path.c_str()));

  rep.report["center"] = a.center;
  rep.report["method"] = a.method;
  rep.report["partition"] = a.partition;
  rep.report["truncation"] = truncation;
  if (a.tol >= 0) rep.report["tol"] = a.tol;
  rep.report["output"] = a.out_path;
  note("truncated at %s to rank %llu, local error %.3g", a.center.c_str(),
       static_cast<unsigned long long>(truncation["rank"].get<uint64_t>()),
       truncation["local_error"].get<double>());
}

void run_norm(const std::string& path, const std::string& report_path) {
  TensorPtr t = load_tensor(path);
  double norm = 0;
  check(tnk_tensor_norm(t.get(), &norm));
  std::printf("%.17g\n", norm);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::trunc);
    out << json{{"norm", norm}, {"path", path}}.dump() << "\n";
  }
}

struct VerifyArgs {
  std::string manifest;
  std::string center;
  double tol = -1.0;
};

void run_verify_center(const VerifyArgs& a, Reporter& rep) {
  TtnPtr tn = load_ttn(a.manifest);
  int pass = 0;
  json verification =
      verify_json(tn.get(), a.center.empty() ? nullptr : a.center.c_str(), a.tol, &pass);
  rep.report["verify"] = verification;
  note("max deviation %.3g (%s)", verification["max_deviation"].get<double>(),
       pass ? "pass" : "fail");
  if (!pass)
    throw CliError{2, "center verification failed, max deviation " +
                          std::to_string(verification["max_deviation"].get<double>())};
}

// ---- selftest: randomized end-to-end battery through the C API ----

struct SelftestState {
  std::mt19937_64 rng;
  json checks = json::array();
  bool all_pass = true;

  explicit SelftestState(uint64_t seed) : rng(seed) {}

  std::vector<double> randoms(std::size_t n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> out(n);
    for (double& v : out) v = dist(rng);
    return out;
  }

  TensorPtr random_tensor(const std::vector<uint64_t>& dims, bool complex_kind) {
    uint64_t n = 1;
    for (uint64_t d : dims) n *= d;
    std::vector<double> data = randoms(complex_kind ? 2 * n : n);
    tnk_tensor* raw = nullptr;
    if (complex_kind)
      check(tnk_tensor_create_complex(dims.data(), static_cast<uint32_t>(dims.size()),
                                      data.data(), &raw));
    else
      check(tnk_tensor_create_real(dims.data(), static_cast<uint32_t>(dims.size()),
                                   data.data(), &raw));
    return TensorPtr(raw);
  }

  void record(const std::string& name, double deviation, double limit) {
    bool pass = deviation <= limit;
    all_pass = all_pass && pass;
    checks.push_back(json{{"name", name}, {"deviation", deviation}, {"limit", limit},
                          {"pass", pass}});
  }
};

double norm_of(const TensorPtr& t) {
  double v = 0;
  check(tnk_tensor_norm(t.get(), &v));
  return v;
}

TensorPtr contract(const TensorPtr& a, const TensorPtr& b,
                   const std::vector<uint32_t>& a_axes,
                   const std::vector<uint32_t>& b_axes) {
  tnk_tensor* raw = nullptr;
  check(tnk_contract_pair(a.get(), b.get(), a_axes.data(), b_axes.data(),
                          static_cast<uint32_t>(a_axes.size()), &raw));
  return TensorPtr(raw);
}

void selftest_identity_contraction(SelftestState& st, bool complex_kind) {
  TensorPtr a = st.random_tensor({2, 3, 4}, complex_kind);
  std::vector<double> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[4 * i + i] = 1.0;
  uint64_t dims[2] = {4, 4};
  tnk_tensor* eye_raw = nullptr;
  check(tnk_tensor_create_real(dims, 2, eye.data(), &eye_raw));
  TensorPtr identity(eye_raw);
  TensorPtr product = contract(a, identity, {2}, {0});
  double drift = 0;
  check(tnk_tensor_difference_norm(a.get(), product.get(), &drift));
  st.record(complex_kind ? "identity_contraction_complex" : "identity_contraction_real",
            drift, 1e-12 * (1.0 + norm_of(a)));
}

void selftest_ttr_norm(SelftestState& st) {
  TensorPtr a = st.random_tensor({3, 5}, false);
  double re = 0, im = 0, norm = 0;
  check(tnk_tensor_ttr(a.get(), a.get(), &re, &im));
  check(tnk_tensor_norm(a.get(), &norm));
  st.record("ttr_matches_norm", std::abs(re - norm * norm) + std::abs(im),
            1e-12 * (1.0 + norm * norm));
}

void selftest_svd_reconstruction(SelftestState& st, bool complex_kind) {
  TensorPtr m = st.random_tensor({6, 4}, complex_kind);
  uint32_t rows[1] = {0}, cols[1] = {1};
  tnk_factorization* raw = nullptr;
  check(tnk_decompose(m.get(), TNK_FACTOR_SVD, rows, 1, cols, 1, &raw));
  FactorizationPtr f(raw);
  tnk_tensor *u_raw = nullptr, *s_raw = nullptr, *vh_raw = nullptr;
  check(tnk_factor_get(f.get(), 0, &u_raw));
  check(tnk_factor_get(f.get(), 1, &s_raw));
  check(tnk_factor_get(f.get(), 2, &vh_raw));
  TensorPtr u(u_raw), s(s_raw), vh(vh_raw);
  TensorPtr us = contract(u, s, {1}, {0});
  TensorPtr rebuilt = contract(us, vh, {1}, {0});
  double drift = 0;
  check(tnk_tensor_difference_norm(m.get(), rebuilt.get(), &drift));
  st.record(complex_kind ? "svd_reconstruction_complex" : "svd_reconstruction_real",
            drift, 1e-12 * (1.0 + norm_of(m)));

  int pass = 0;
  double deviation = 0;
  check(tnk_tensor_is_isometry(u.get(), rows, 1, cols, 1, 0, &pass, &deviation, nullptr));
  st.record(complex_kind ? "svd_isometry_complex" : "svd_isometry_real",
            pass ? deviation : 1.0, 1e-12);
}

void selftest_chain_network(SelftestState& st) {
  TensorPtr a = st.random_tensor({3, 3}, false);
  TensorPtr b = st.random_tensor({3, 3}, false);
  TensorPtr c = st.random_tensor({3, 3}, false);
  tnk_network* net_raw = nullptr;
  check(tnk_network_create(&net_raw));
  NetworkPtr net(net_raw);
  int32_t la[2] = {-1, 1}, lb[2] = {1, 2}, lc[2] = {2, -2};
  check(tnk_network_add(net.get(), "A", la, 2, a.get()));
  check(tnk_network_add(net.get(), "B", lb, 2, b.get()));
  check(tnk_network_add(net.get(), "C", lc, 2, c.get()));

  tnk_tensor* auto_raw = nullptr;
  check(tnk_network_contract(net.get(), nullptr, &auto_raw, nullptr));
  TensorPtr auto_value(auto_raw);

  tnk_tree* greedy_raw = nullptr;
  check(tnk_search_sequence(net.get(), 1, &greedy_raw));
  TreePtr greedy(greedy_raw);
  tnk_tensor* greedy_value_raw = nullptr;
  check(tnk_network_contract(net.get(), greedy.get(), &greedy_value_raw, nullptr));
  TensorPtr greedy_value(greedy_value_raw);

  double drift = 0;
  check(tnk_tensor_difference_norm(auto_value.get(), greedy_value.get(), &drift));
  st.record("chain_plan_independence", drift, 1e-12 * (1.0 + norm_of(auto_value)));

  TensorPtr ab = contract(a, b, {1}, {0});
  TensorPtr abc = contract(ab, c, {1}, {0});
  check(tnk_tensor_difference_norm(auto_value.get(), abc.get(), &drift));
  st.record("chain_matches_pairwise", drift, 1e-12 * (1.0 + norm_of(abc)));
}

void selftest_orthogonalize(SelftestState& st, bool direct) {
  tnk_network* net_raw = nullptr;
  check(tnk_network_create(&net_raw));
  NetworkPtr net(net_raw);
  TensorPtr a = st.random_tensor({2, 3, 3, 2}, false);
  TensorPtr b = st.random_tensor({3, 2}, false);
  TensorPtr c = st.random_tensor({3, 2, 2}, false);
  int32_t la[4] = {-1, 1, 2, -2}, lb[2] = {1, -3}, lc[3] = {2, -4, -5};
  check(tnk_network_add(net.get(), "A", la, 4, a.get()));
  check(tnk_network_add(net.get(), "B", lb, 2, b.get()));
  check(tnk_network_add(net.get(), "C", lc, 3, c.get()));

  tnk_ttn* tn_raw = nullptr;
  check(tnk_ttn_build(net.get(), &tn_raw));
  TtnPtr tn(tn_raw);

  tnk_tensor* before_raw = nullptr;
  check(tnk_ttn_contract(tn.get(), &before_raw));
  TensorPtr before(before_raw);

  tnk_ttn* centered_raw = nullptr;
  check(tnk_ttn_orthogonalize(tn.get(), "A", direct ? 1 : 0, &centered_raw, nullptr));
  TtnPtr centered(centered_raw);

  int pass = 0;
  char* verify_raw = nullptr;
  check(tnk_ttn_verify_center(centered.get(), nullptr, 0, &pass, &verify_raw));
  json verification = parse_owned_json(Str(verify_raw));
  const char* tag = direct ? "direct" : "pull";
  st.record(std::string("orthogonalize_") + tag + "_verify",
            pass ? verification["max_deviation"].get<double>() : 1.0, 1e-8);

  tnk_tensor* after_raw = nullptr;
  check(tnk_ttn_contract(centered.get(), &after_raw));
  TensorPtr after(after_raw);
  double drift = 0;
  check(tnk_tensor_difference_norm(before.get(), after.get(), &drift));
  st.record(std::string("orthogonalize_") + tag + "_preserves_value", drift,
            1e-10 * (1.0 + norm_of(before)));

  double collapsed = 0;
  check(tnk_ttn_center_norm(centered.get(), 0, &collapsed));
  st.record(std::string("orthogonalize_") + tag + "_norm_collapse",
            std::abs(collapsed - norm_of(before)), 1e-10 * (1.0 + norm_of(before)));
}

void selftest_principal_sqrt(SelftestState& st) {
  TensorPtr b = st.random_tensor({4, 6}, true);
  tnk_tensor* bc_raw = nullptr;
  check(tnk_tensor_conjugate(b.get(), &bc_raw));
  TensorPtr bc(bc_raw);
  TensorPtr rho = contract(b, bc, {1}, {1});

  tnk_tensor *x_raw = nullptr, *xinv_raw = nullptr;
  check(tnk_principal_sqrt(rho.get(), 0, 0, &x_raw, &xinv_raw, nullptr));
  TensorPtr x(x_raw), xinv(xinv_raw);

  tnk_tensor* xc_raw = nullptr;
  check(tnk_tensor_conjugate(x.get(), &xc_raw));
  TensorPtr xc(xc_raw);
  TensorPtr rebuilt = contract(x, xc, {1}, {1});
  double drift = 0;
  check(tnk_tensor_difference_norm(rho.get(), rebuilt.get(), &drift));
  st.record("principal_sqrt_reconstruction", drift, 1e-10 * (1.0 + norm_of(rho)));
}

void run_selftest(uint64_t seed, Reporter& rep) {
  SelftestState st(seed);
  selftest_identity_contraction(st, false);
  selftest_identity_contraction(st, true);
  selftest_ttr_norm(st);
  selftest_svd_reconstruction(st, false);
  selftest_svd_reconstruction(st, true);
  selftest_chain_network(st);
  selftest_orthogonalize(st, false);
  selftest_orthogonalize(st, true);
  selftest_principal_sqrt(st);

  rep.report["seed"] = seed;
  rep.report["checks"] = st.checks;
  rep.report["pass"] = st.all_pass;
  std::size_t failed = 0;
  for (const json& c : st.checks)
    if (!c["pass"].get<bool>()) ++failed;
  note("%zu checks, %zu failed", st.checks.size(), failed);
  if (!st.all_pass) throw CliError{2, "selftest failed"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensor network toolkit"};
  app.require_subcommand(1);

  std::string report_path;

  ContractArgs contract_args;
  CLI::App* cmd_contract = app.add_subcommand("contract", "contract a network manifest");
  cmd_contract->add_option("manifest", contract_args.manifest, "network manifest JSON")
      ->required();
  cmd_contract->add_option("--sequence", contract_args.sequence_mode,
                           "auto, greedy or file:<path>");
  cmd_contract->add_option("--out", contract_args.out_path, "result tensor file");
  cmd_contract->add_option("--report", report_path, "also write the report here");

  SequenceArgs sequence_args;
  CLI::App* cmd_sequence = app.add_subcommand("sequence", "search a contraction plan");
  cmd_sequence->add_option("manifest", sequence_args.manifest, "network manifest JSON")
      ->required();
  cmd_sequence->add_option("--method", sequence_args.method, "dp or greedy");
  cmd_sequence->add_option("--out", sequence_args.out_path, "plan JSON file");
  cmd_sequence->add_option("--report", report_path, "also write the report here");

  DecompArgs decomp_args;
  CLI::App* cmd_decomp = app.add_subcommand("decomp", "factorize a tensor file");
  cmd_decomp->add_option("tensor", decomp_args.tensor_path, "tensor .tnt file")
      ->required();
  cmd_decomp->add_option("--kind", decomp_args.kind, "svd, qr or eig")->required();
  cmd_decomp
      ->add_option("--partition", decomp_args.partition, "row,axes/col,axes (e.g. 0,1/2)")
      ->required();
  CLI::Option* rank_opt = cmd_decomp->add_option("--rank", decomp_args.rank,
                                                 "truncate to this many values");
  cmd_decomp->add_option("--tol", decomp_args.tol, "truncate to this error bound")
      ->excludes(rank_opt);
  cmd_decomp->add_option("--prefix", decomp_args.prefix,
                         "output prefix (default: input minus .tnt)");
  cmd_decomp->add_option("--report", report_path, "also write the report here");

  OrthogonalizeArgs ortho_args;
  CLI::App* cmd_ortho =
      app.add_subcommand("orthogonalize", "gauge a tree network onto a center");
  cmd_ortho->add_option("manifest", ortho_args.manifest, "tree manifest JSON")->required();
  cmd_ortho->add_option("--center", ortho_args.center, "center tensor id")->required();
  cmd_ortho->add_option("--method", ortho_args.method, "pull or direct");
  cmd_ortho->add_option("--out", ortho_args.out_path, "output manifest path")->required();
  cmd_ortho->add_option("--tol", ortho_args.tol, "verification tolerance");
  cmd_ortho->add_option("--report", report_path, "also write the report here");

  TruncateArgs truncate_args;
  CLI::App* cmd_truncate =
      app.add_subcommand("truncate", "center a tree network and cut the center bond");
  cmd_truncate->add_option("manifest", truncate_args.manifest, "tree manifest JSON")
      ->required();
  cmd_truncate->add_option("--center", truncate_args.center, "center tensor id")
      ->required();
  cmd_truncate
      ->add_option("--partition", truncate_args.partition, "row,axes/col,axes of the center")
      ->required();
  cmd_truncate->add_option("--method", truncate_args.method,
                           "centering method, pull or direct");
  CLI::Option* trank_opt =
      cmd_truncate->add_option("--rank", truncate_args.rank, "target rank");
  cmd_truncate->add_option("--tol", truncate_args.tol, "target error bound")
      ->excludes(trank_opt);
  cmd_truncate->add_flag("--verify-global", truncate_args.verify_global,
                         "contract both networks and report the global error");
  cmd_truncate->add_option("--out", truncate_args.out_path, "output manifest path")
      ->required();
  cmd_truncate->add_option("--report", report_path, "also write the report here");

  std::string norm_path;
  CLI::App* cmd_norm = app.add_subcommand("norm", "print the norm of a tensor file");
  cmd_norm->add_option("tensor", norm_path, "tensor .tnt file")->required();
  cmd_norm->add_option("--report", report_path, "write a JSON report here");

  VerifyArgs verify_args;
  CLI::App* cmd_verify =
      app.add_subcommand("verify-center", "check the isometric branches of a center");
  cmd_verify->add_option("manifest", verify_args.manifest, "tree manifest JSON")
      ->required();
  cmd_verify->add_option("--center", verify_args.center,
                         "center id (default: the stored center)");
  cmd_verify->add_option("--tol", verify_args.tol, "deviation tolerance");
  cmd_verify->add_option("--report", report_path, "also write the report here");

  uint64_t selftest_seed = 12345;
  CLI::App* cmd_selftest =
      app.add_subcommand("selftest", "randomized end-to-end consistency battery");
  cmd_selftest->add_option("--seed", selftest_seed, "RNG seed");
  cmd_selftest->add_option("--report", report_path, "also write the report here");

  CLI11_PARSE(app, argc, argv);

  Reporter rep(join_args(argc, argv));
  rep.report_path = report_path;
  try {
    if (*cmd_contract) {
      run_contract(contract_args, rep);
    } else if (*cmd_sequence) {
      run_sequence(sequence_args, rep);
    } else if (*cmd_decomp) {
      run_decomp(decomp_args, rep);
    } else if (*cmd_ortho) {
      run_orthogonalize(ortho_args, rep);
    } else if (*cmd_truncate) {
      run_truncate(truncate_args, rep);
    } else if (*cmd_norm) {
      run_norm(norm_path, report_path);
      return 0;
    } else if (*cmd_verify) {
      run_verify_center(verify_args, rep);
    } else if (*cmd_selftest) {
      run_selftest(selftest_seed, rep);
    }
    rep.emit(0);
    return 0;
  } catch (const CliError& e) {
    note("tnk: %s", e.message.c_str());
    rep.report["error"] = e.message;
    rep.emit(e.exit_code);
    return e.exit_code;
  }
}
