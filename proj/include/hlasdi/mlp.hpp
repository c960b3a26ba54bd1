#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hlasdi/container.hpp"
#include "hlasdi/tape.hpp"

namespace hlasdi {

/// Fully connected architecture given as layer widths, e.g. 1001-250-100-100-5.
/// Sine activation after every layer except the last.
struct MlpSpec {
  std::vector<int> widths;

  static MlpSpec parse(const std::string& text);
  std::string str() const;
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  int layer_count() const { return int(widths.size()) - 1; }
};

struct Mlp {
  std::vector<Mat> weights;  // layer l maps widths[l] -> widths[l+1]
  std::vector<Vec> biases;

  /// Activation applied after layer l; the final layer has none.
  const char* activation(int layer) const {
    return layer + 1 == int(weights.size()) ? "none" : "sine";
  }

  /// Batched forward pass (columns are samples).
  Mat forward(const Mat& x) const;
};

/// The K encoder/decoder pairs; pair k handles the k-th time derivative
/// channel. The decoder reverses the encoder widths.
struct AutoencoderStack {
  MlpSpec spec;  // encoder widths
  int K = 1;
  int L = 0;
  uint64_t seed = 0;
  std::vector<Mlp> encoders, decoders;

  Mat encode(int k, const Mat& frames) const;
  Mat decode(int k, const Mat& latents) const;
};

/// Deterministic initialization: weights uniform on [-1/sqrt(fan_in),
/// +1/sqrt(fan_in)], biases zero.
AutoencoderStack init_stack(const MlpSpec& spec, int K, uint64_t seed);

/// Plain forward-mode Jacobian-vector product of encoder k:
/// [D enc_k(points)](tangents), column-wise.
Mat encoder_jvp(const AutoencoderStack& stack, int k, const Mat& points,
                const Mat& tangents);

/// Tape-side handles of one MLP's parameters.
struct MlpVars {
  std::vector<Var> weights, biases;
};

struct StackVars {
  std::vector<MlpVars> enc, dec;
};

/// Register every weight of the stack as tape leaves (values copied).
StackVars register_stack(Tape& tape, const AutoencoderStack& stack);

/// Batched encoder forward on the tape. When `preacts` is given it receives
/// the pre-activation node of every hidden layer (used by the JVP below).
Var encode_on_tape(Tape& tape, const MlpVars& mlp, Var x,
                   std::vector<Var>* preacts = nullptr);
Var decode_on_tape(Tape& tape, const MlpVars& mlp, Var z);

/// Forward-mode JVP through the encoder, recorded on the tape so the result
/// can itself be differentiated. `preacts` must come from encode_on_tape
/// with the same inputs.
Var encoder_jvp_on_tape(Tape& tape, const MlpVars& mlp,
                        const std::vector<Var>& preacts, Var tangents);

/// Weight checkpoint: JSON header (spec, K, L, seed, epoch) + float64 arrays
/// in declared order.
void stack_to_container(const AutoencoderStack& stack, long epoch,
                        Container& c);
AutoencoderStack stack_from_container(const Container& c);

}  // namespace hlasdi
