#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcopf/common.hpp"
#include "fcopf/nn.hpp"
#include "fcopf/solver.hpp"

namespace fcopf {

struct InputBox {
  std::vector<double> lower;
  std::vector<double> upper;

  void validate(std::size_t arity) const;
  bool contains(std::span<const double> x, double tol = 0.0) const;
};

enum class Polarity { unstable, always_active, always_inactive };

/// Pre-activation intervals per layer; the last entry is the output layer.
struct NeuronBounds {
  std::vector<std::vector<double>> lower;
  std::vector<std::vector<double>> upper;

  Polarity polarity(std::size_t layer, std::size_t j) const;
  std::size_t hidden_layers() const { return lower.size() - 1; }
  std::size_t stable_count() const;
  std::size_t unstable_count() const;
  double total_width() const;  // sum of (h_u - h_l) over hidden neurons
};

/// Interval propagation through the network with its normalization folded
/// in, so bounds are in raw feature and label units.
NeuronBounds propagate_bounds(const MlpModel& model, const InputBox& box);

// Tightens every hidden interval with two LPs per neuron over the big-M
// relaxation of the layers below it. `domain` rows, indexed by input, cut the
// box further (e.g. power balance).
NeuronBounds tighten_bounds(const MlpModel& model, const InputBox& box, const NeuronBounds& start,
                            const std::vector<Constraint>& domain = {});

/// sum(terms) + constant; a network input wired into a larger problem.
struct LinExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  static LinExpr of(std::size_t var) { return {{{var, 1.0}}, 0.0}; }
  static LinExpr value(double c) { return {{}, c}; }
};

enum class EncodeMode {
  explicit_z,  // z variable plus an affine row per neuron
  compact,     // z substituted into the big-M rows
};

struct EncodeOptions {
  EncodeMode mode = EncodeMode::explicit_z;
  std::string prefix = "nn";
};

inline constexpr std::size_t no_var = static_cast<std::size_t>(-1);

struct MilpFragment {
  std::vector<std::vector<std::size_t>> z;       // no_var in compact mode
  std::vector<std::vector<std::size_t>> a;       // no_var when always inactive
  std::vector<std::vector<std::size_t>> binary;  // no_var when stable
  std::vector<std::size_t> outputs;
  std::size_t first_row = 0;
  std::size_t row_count = 0;
  std::size_t stable = 0;
};

/// Appends the network to `problem`. `model` must have identity affines
/// (see fold_normalization); inputs are raw features.
MilpFragment encode_network(MilpProblem& problem, const MlpModel& model, const NeuronBounds& bounds,
                            const std::vector<LinExpr>& inputs, const EncodeOptions& options = {});

// Writes the exact ReLU assignment for input `x` into the fragment's
// variables of `values` (binary = 1 iff the pre-activation is positive).
void complete_fragment(const MlpModel& model, const MilpFragment& fragment, std::span<const double> x,
                       std::vector<double>& values);

struct VerifyReport {
  std::size_t samples = 0;
  double max_deviation = 0.0;
  std::size_t failures = 0;
  std::size_t stable_neurons = 0;
  bool passed = true;
};

/// Fixes random box inputs, minimizes and maximizes the sum of the outputs
/// over the fragment, and compares both optima with forward().
VerifyReport verify_encoding(const MlpModel& model, const InputBox& box, const NeuronBounds& bounds,
                             std::size_t samples, std::uint64_t seed, const EncodeOptions& options = {},
                             Execution exec = Execution::parallel);

struct SoundnessReport {
  std::size_t samples = 0;
  std::size_t escapes = 0;  // pre-activations outside their interval
  double worst_escape = 0.0;
};

SoundnessReport check_soundness(const MlpModel& model, const InputBox& box, const NeuronBounds& bounds,
                                std::size_t samples, std::uint64_t seed, Execution exec = Execution::parallel);

}  // namespace fcopf
