#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aop/autodiff/op_counter.hpp"
#include "aop/experts/model.hpp"

namespace aop::costbench {

// Experts modelled as affine maps R^d -> R^n applied to a t x d input.
struct CostModel {
  std::uint64_t r = 1;  // experts
  std::uint64_t t = 1;  // sequence length
  std::uint64_t d = 1;  // input width
  std::uint64_t n = 1;  // output width

  void validate() const;  // ContractError when a field is zero
};

// r t d n + r t n: every expert on every position, then the gated sum.
std::uint64_t moe_cost(const CostModel& m);
// (r + t) d n: mix r weight matrices once, then one pass over t positions.
std::uint64_t aop_cost(const CostModel& m);

struct GridRow {
  CostModel model;
  std::uint64_t moe = 0;
  std::uint64_t aop = 0;
  bool asserted = false;  // r >= 2 and t >= 2
  bool holds = true;      // aop < moe (only meaningful when asserted)
};

struct TheoremReport {
  std::vector<GridRow> rows;
  std::vector<GridRow> violations;
  std::size_t asserted = 0;
  double seconds = 0;

  bool ok() const { return violations.empty(); }
  void write_table(std::ostream& out) const;
};

// r in 1..13, t in 1..64, d and n in {8, 64, 300}.
std::vector<CostModel> default_grid();
// "default", or "r=2:13,t=2:64,d=8|64,n=8|64" style ranges.
std::vector<CostModel> parse_grid(const std::string& spec);

TheoremReport verify_theorem(const std::vector<CostModel>& grid);

struct PathStats {
  double median_seconds = 0;  // one sweep over the inputs
  autodiff::OpCounter per_sweep;
};

struct CompareReport {
  std::size_t experts = 0;
  std::size_t target_length = 0;
  std::size_t inputs = 0;
  std::size_t repetitions = 0;
  PathStats aop, aor;

  double ratio() const { return aor.median_seconds / aop.median_seconds; }
};

// An untrained AoP model with the first r known skills as experts and encoded inputs whose decoder
// side has length t.
struct BenchSetup {
  experts::DialogueModel model;
  std::vector<experts::EncodedExample> inputs;
};

BenchSetup make_bench_setup(std::size_t experts, std::size_t target_length, std::size_t count,
                            const transformer::ModelConfig& cfg, std::uint64_t seed);

// Runs aop_forward and aor_forward on the same bank and inputs, single
// threaded, and keeps the median wall time of `repetitions` sweeps. Throws
// ContractError if the decoder pass counts differ from 1 and r per input.
CompareReport empirical_compare(const experts::DialogueModel& model,
                                const std::vector<experts::EncodedExample>& inputs, std::size_t repetitions);

std::string to_json(const TheoremReport& theorem, const std::vector<CompareReport>& timings);
void write_compare(std::ostream& out, const CompareReport& report);

}  // namespace aop::costbench
