// Command-line driver: generate instances, run selection pipelines, verify
// previously written reports, and print certified bounds.
//
// Exit codes for select/verify: 0 when the run succeeds and every gate
// passes; 1 for usage or input errors (bad flags, unreadable or malformed
// files, mismatched instance digest); 2 for internal consistency failures;
// 3 when the computation ran but conformance failed (bound not satisfied,
// tampered selection, disagreeing measurements).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helly/select.hpp"

namespace {

using helly::Errc;
using helly::Error;
using helly::SelectionAlgorithm;
using helly::SelectionReport;
using helly::VolumePolicy;

constexpr std::uint64_t kVerifySeedSalt = 0x76657269ULL;  // decouples verify's
// sample stream from the one used by select under the same --seed

const char* const kUsage =
    "usage: helly <command> [flags]\n"
    "\n"
    "commands:\n"
    "  gen     --shape {cube|cross|simplex|random} --n N [--m M] [--seed S]\n"
    "          [--symmetric] [--out PATH]\n"
    "              write an instance file (JSON); random shapes require --m\n"
    "  select  --algo {symmetric|lifted|naszodi} --input PATH [--d D]\n"
    "          [--out PATH] [--seed S] [--samples N] [--exact]\n"
    "              run a selection pipeline and write its report\n"
    "  verify  --input INSTANCE --report REPORT [--out PATH] [--seed S]\n"
    "          [--samples N] [--exact]\n"
    "              re-measure a report against its instance with a fresh\n"
    "              sample stream and write a verification file\n"
    "  bound   --n N [--d D] [--algo A]\n"
    "              print certified volume-ratio bounds\n"
    "\n"
    "defaults: --d 4, --seed 0, --samples 1000000; reports go to stdout when\n"
    "--out is missing. --exact forces exact volume (errors above the vertex\n"
    "enumeration budget). naszodi takes no --d. Set HELLY_LOG=info|debug for\n"
    "progress on stderr.\n";

int usage_error(const std::string& msg) {
  std::fprintf(stderr, "error: %s\n\n%s", msg.c_str(), kUsage);
  return 1;
}

struct ParsedArgs {
  std::string command;
  std::map<std::string, std::string> values;
  std::set<std::string> switches;

  bool has(const std::string& k) const {
    return values.count(k) != 0 || switches.count(k) != 0;
  }
  std::string value(const std::string& k, const std::string& fallback = "") const {
    auto it = values.find(k);
    return it == values.end() ? fallback : it->second;
  }
};

const std::set<std::string> kValueFlags = {"shape", "n",      "m",     "seed", "out",
                                           "algo",  "d",      "input", "report", "samples"};
const std::set<std::string> kSwitchFlags = {"symmetric", "exact", "help"};

bool parse_args(int argc, char** argv, ParsedArgs* out, std::string* err) {
  if (argc < 2) {
    *err = "missing command";
    return false;
  }
  out->command = argv[1];
  for (int i = 2; i < argc; ++i) {
    std::string tok = argv[i];
    if (tok.rfind("--", 0) != 0) {
      *err = "unexpected argument '" + tok + "'";
      return false;
    }
    tok = tok.substr(2);
    if (kSwitchFlags.count(tok) != 0) {
      out->switches.insert(tok);
      continue;
    }
    if (kValueFlags.count(tok) == 0) {
      *err = "unknown flag '--" + tok + "'";
      return false;
    }
    if (i + 1 >= argc) {
      *err = "flag '--" + tok + "' needs a value";
      return false;
    }
    out->values[tok] = argv[++i];
  }
  return true;
}

long long parse_ll(const ParsedArgs& args, const std::string& key, long long fallback) {
  if (args.values.count(key) == 0) return fallback;
  const std::string& s = args.values.at(key);
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    helly::fail(Errc::value_error, "flag '--" + key + "': not an integer: '" + s + "'");
  }
  helly::check(pos == s.size(), Errc::value_error,
               "flag '--" + key + "': trailing junk in '" + s + "'");
  return v;
}

double parse_double(const ParsedArgs& args, const std::string& key, double fallback) {
  if (args.values.count(key) == 0) return fallback;
  const std::string& s = args.values.at(key);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    helly::fail(Errc::value_error, "flag '--" + key + "': not a number: '" + s + "'");
  }
  helly::check(pos == s.size(), Errc::value_error,
               "flag '--" + key + "': trailing junk in '" + s + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  helly::check(in.good(), Errc::value_error, "cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const ParsedArgs& args, const std::string& content) {
  if (args.values.count("out") == 0) {
    std::fputs(content.c_str(), stdout);
    std::fputc('\n', stdout);
    return;
  }
  const std::string& path = args.values.at("out");
  std::ofstream out(path);
  helly::check(out.good(), Errc::value_error, "cannot open '" + path + "' for writing");
  out << content << '\n';
  helly::check(out.good(), Errc::value_error, "short write to '" + path + "'");
}

VolumePolicy policy_from(const ParsedArgs& args, std::uint64_t seed_salt) {
  VolumePolicy policy;
  policy.force_exact = args.switches.count("exact") != 0;
  policy.samples = parse_ll(args, "samples", policy.samples);
  helly::check(policy.samples > 0, Errc::value_error, "flag '--samples': must be positive");
  policy.seed = static_cast<std::uint64_t>(parse_ll(args, "seed", 0)) ^ seed_salt;
  return policy;
}

// Residual gates re-checked at the boundary so the exit status is a pure
// function of the report contents, not of which pipeline produced them.
bool residuals_pass(const SelectionReport& rep) {
  for (const char* key : {"identity", "barycenter"}) {
    auto it = rep.residuals.find(key);
    if (it != rep.residuals.end() && !(it->second <= 1e-5)) return false;
  }
  auto it = rep.residuals.find("caratheodory");
  if (it != rep.residuals.end() && !(it->second <= 1e-8)) return false;
  return true;
}

int run_gen(const ParsedArgs& args) {
  helly::check(args.has("shape"), Errc::value_error, "gen: missing --shape");
  helly::check(args.has("n"), Errc::value_error, "gen: missing --n");
  const helly::InstanceKind kind = helly::instance_kind_from_name(args.value("shape"));
  const long long n = parse_ll(args, "n", 0);
  const long long m = parse_ll(args, "m", 0);
  const std::uint64_t seed = static_cast<std::uint64_t>(parse_ll(args, "seed", 0));
  helly::check(n >= 1 && n <= 64, Errc::value_error, "gen: --n out of range");
  const helly::HalfspaceFamily family = helly::generate_instance(
      kind, static_cast<int>(n), static_cast<int>(m), seed, args.switches.count("symmetric") != 0);
  write_output(args, helly::serialize_family(family));
  return 0;
}

int run_bound(const ParsedArgs& args) {
  helly::check(args.has("n"), Errc::value_error, "bound: missing --n");
  const int n = static_cast<int>(parse_ll(args, "n", 0));
  const double d = parse_double(args, "d", 4.0);
  std::vector<SelectionAlgorithm> algos;
  if (args.has("algo")) {
    algos.push_back(helly::algorithm_from_string(args.value("algo")));
    helly::check(!(algos[0] == SelectionAlgorithm::naszodi && args.values.count("d") != 0),
                 Errc::value_error, "bound: naszodi takes no --d");
  } else {
    algos = {SelectionAlgorithm::symmetric, SelectionAlgorithm::lifted,
             SelectionAlgorithm::naszodi};
  }
  for (SelectionAlgorithm algo : algos) {
    const bool uses_d = algo != SelectionAlgorithm::naszodi;
    const double log_ratio = helly::certified_bound(algo, n, uses_d ? d : 0.0);
    if (uses_d)
      std::printf("%s n=%d d=%g log_ratio=%.12g ratio=%.6e\n", to_string(algo).c_str(), n, d,
                  log_ratio, std::exp(log_ratio));
    else
      std::printf("%s n=%d log_ratio=%.12g ratio=%.6e\n", to_string(algo).c_str(), n, log_ratio,
                  std::exp(log_ratio));
    if (algo == SelectionAlgorithm::symmetric)
      std::printf("  symmetric log-volume floor: %.12g\n",
                  helly::symmetric_log_volume_floor(n, d));
  }
  return 0;
}

int run_select(const ParsedArgs& args) {
  helly::check(args.has("algo"), Errc::value_error, "select: missing --algo");
  helly::check(args.has("input"), Errc::value_error, "select: missing --input");
  const SelectionAlgorithm algo = helly::algorithm_from_string(args.value("algo"));
  helly::check(!(algo == SelectionAlgorithm::naszodi && args.values.count("d") != 0),
               Errc::value_error, "select: naszodi takes no --d");
  const double d = parse_double(args, "d", 4.0);
  const VolumePolicy policy = policy_from(args, 0);

  const helly::HalfspaceFamily family = helly::parse_family(read_file(args.value("input")));
  const helly::Polytope p(family);

  // Input phase ends here; later failures are computation outcomes (exit 3)
  // except internal check violations (exit 2).
  try {
    SelectionReport rep = helly::run_selection(p, algo, d);
    helly::measure_report(p, rep, policy);
    write_output(args, helly::serialize_report(rep));
    return rep.bound_satisfied && residuals_pass(rep) ? 0 : 3;
  } catch (const Error& e) {
    if (e.code() == Errc::internal_check_failed) throw;
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

int run_verify(const ParsedArgs& args) {
  helly::check(args.has("input"), Errc::value_error, "verify: missing --input");
  helly::check(args.has("report"), Errc::value_error, "verify: missing --report");
  const helly::HalfspaceFamily family = helly::parse_family(read_file(args.value("input")));
  const SelectionReport rep = helly::parse_report(read_file(args.value("report")));
  helly::check(helly::instance_digest(family) == rep.instance_digest, Errc::mismatched_instance,
               "verify: report digest does not match the instance file");
  const helly::Polytope p(family);
  const SelectionAlgorithm algo = helly::algorithm_from_string(rep.algorithm);
  const VolumePolicy policy = policy_from(args, kVerifySeedSalt);

  nlohmann::json v;
  v["instance_digest"] = rep.instance_digest;
  v["algorithm"] = rep.algorithm;
  bool pass = true;
  std::string failure;
  try {
    // Certified bound and cardinality cap must reproduce from (algo, n, d).
    const double cert = helly::certified_bound(algo, family.dim, rep.has_d ? rep.d : 0.0);
    if (!(std::fabs(cert - rep.certified_log_ratio) <= 1e-9 * std::max(1.0, std::fabs(cert)))) {
      pass = false;
      failure = "certified bound does not reproduce";
    }
    int cap = 0;
    switch (algo) {
      case SelectionAlgorithm::symmetric:
        cap = static_cast<int>(std::ceil(rep.d * family.dim - 1e-12));
        break;
      case SelectionAlgorithm::lifted:
        cap = static_cast<int>(std::ceil(rep.d * (family.dim + 1) - 1e-12)) + family.dim + 1;
        break;
      case SelectionAlgorithm::naszodi:
        cap = 2 * family.dim;
        break;
    }
    if (rep.s > cap) {
      pass = false;
      failure = "selection cardinality exceeds the algorithm's cap";
    }

    SelectionReport fresh = rep;
    helly::measure_report(p, fresh, policy);
    v["recomputed_ratio"] = {{"estimate", fresh.measured_ratio.estimate},
                             {"ci99", {fresh.measured_ratio.ci99_low,
                                       fresh.measured_ratio.ci99_high}},
                             {"method", fresh.measured_ratio.method},
                             {"samples", fresh.measured_ratio.samples}};
    if (!fresh.bound_satisfied) {
      pass = false;
      if (failure.empty()) failure = "recomputed ratio violates the certified bound";
    }
    if (rep.measured) {
      v["reported_ratio"] = {{"estimate", rep.measured_ratio.estimate},
                             {"ci99", {rep.measured_ratio.ci99_low, rep.measured_ratio.ci99_high}},
                             {"method", rep.measured_ratio.method},
                             {"samples", rep.measured_ratio.samples}};
      // Joint consistency: the two 99% intervals must intersect (an exact
      // measurement is a degenerate interval).
      const bool overlap = rep.measured_ratio.ci99_low <=
                               fresh.measured_ratio.ci99_high * (1.0 + 1e-12) &&
                           fresh.measured_ratio.ci99_low <=
                               rep.measured_ratio.ci99_high * (1.0 + 1e-12);
      if (!overlap) {
        pass = false;
        if (failure.empty()) failure = "reported and recomputed ratios disagree";
      }
    } else {
      v["reported_ratio"] = nullptr;
    }
  } catch (const Error& e) {
    if (e.code() == Errc::internal_check_failed) throw;
    pass = false;
    failure = e.what();
    std::fprintf(stderr, "error: %s\n", e.what());
  }
  v["pass"] = pass;
  if (!failure.empty()) v["failure"] = failure;
  write_output(args, v.dump());
  return pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  ParsedArgs args;
  std::string err;
  if (!parse_args(argc, argv, &args, &err)) return usage_error(err);
  if (args.switches.count("help") != 0 || args.command == "help") {
    std::fputs(kUsage, stdout);
    return 0;
  }
  try {
    if (args.command == "gen") return run_gen(args);
    if (args.command == "select") return run_select(args);
    if (args.command == "verify") return run_verify(args);
    if (args.command == "bound") return run_bound(args);
    return usage_error("unknown command '" + args.command + "'");
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == Errc::internal_check_failed ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
