#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "properhyp/problem.hpp"
#include "properhyp/solver.hpp"

namespace properhyp::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kUsage = 2 };

/// Any problem with the input file or the command line.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckOptions {
  int nx = 201;
  int nt = 3;
  int random_vectors = 1000;
  bool exact = false;
  double ceiling = 1e8;
};

struct ProblemFile {
  Problem problem;
  GridSpec grid;
  CheckOptions check;
  std::vector<double> epsilons;
};

struct Options {
  std::optional<int> grid;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

ProblemFile parse_problem(const nlohmann::json& doc);
ProblemFile load_problem(const std::string& path);
nlohmann::json problem_to_json(const ProblemFile& file);

/// Sample points for the hypothesis checks: nx points across the domain
/// times nt instants in [0, T].
std::vector<TXPoint> check_grid(const ProblemFile& file, const Options& opts);

int cmd_check(const ProblemFile& file, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_symmetrizer(const ProblemFile& file, const Options& opts, std::ostream& out,
                    std::ostream& err);
/// CSV trace goes to opts.out (or `out` when empty); the summary goes to `out`
/// when a file was given and to `err` otherwise.
int cmd_solve(const ProblemFile& file, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const ProblemFile& file, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_l1(const ProblemFile& file, const Options& opts, std::ostream& out, std::ostream& err);

void write_trace_csv(const EnergyTrace& trace, std::ostream& os);

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace properhyp::cli
