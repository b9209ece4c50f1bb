// Batch runner: one INI config -> one experiment -> results.csv + summary.json
// in an output directory.
#pragma once

#include "modnls/datagen.hpp"
#include "modnls/estimates.hpp"
#include "modnls/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace modnls::cli {

enum ExitCode : int {
  kPass = 0,
  kCriteriaFailed = 1,
  kParseError = 2,
  kUnknownExperiment = 3,
  kInvalidParameters = 4,
  kIoError = 5,
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownExperiment : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& experiment_names();

// Every key the runner understands, with defaults filled in. Values are kept
// as the resolved strings so the summary can echo them verbatim.
struct RunConfig {
  std::string experiment;
  std::map<std::string, std::string> values;  // "section.key" -> value

  std::string str(const std::string& key) const;
  Real real(const std::string& key) const;
  int integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<int> ints(const std::string& key) const;

  Grid grid() const;
  ExperimentConfig experiment_config() const;
  // typed values, nested by section
  nlohmann::json resolved() const;
};

// Lengths accept a trailing "pi" ("16pi", "0.5pi").
Real parse_length(const std::string& text);

// Throws ParseError on malformed input or unknown keys, UnknownExperiment
// for an unrecognized [experiment] name.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

// Parses, validates, runs and writes; every failure maps to an ExitCode and
// a message on stderr. Nothing is written unless the run completes.
int run(const std::filesystem::path& config, const std::filesystem::path& out, const Overrides& ov = {});

}  // namespace modnls::cli
