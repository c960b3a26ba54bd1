#include "hlasdi/mlp.hpp"

#include <cmath>

#include "hlasdi/rng.hpp"

namespace hlasdi {

MlpSpec MlpSpec::parse(const std::string& text) {
  MlpSpec spec;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t dash = text.find('-', pos);
    std::string tok = text.substr(pos, dash == std::string::npos ? dash : dash - pos);
    try {
      spec.widths.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad architecture token: " + tok);
    }
    if (spec.widths.back() <= 0)
      throw std::invalid_argument("architecture widths must be positive");
    if (dash == std::string::npos) break;
    pos = dash + 1;
  }
  if (spec.widths.size() < 2)
    throw std::invalid_argument("architecture needs at least two widths");
  return spec;
}

std::string MlpSpec::str() const {
  std::string s;
  for (size_t i = 0; i < widths.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(widths[i]);
  }
  return s;
}

Mat Mlp::forward(const Mat& x) const {
  if (x.rows() != weights.front().cols())
    throw ShapeError("mlp forward: input rows");
  Mat h = (weights[0] * x).colwise() + biases[0];
  for (size_t l = 1; l < weights.size(); ++l) {
    h = h.array().sin();
    h = (weights[l] * h).colwise() + biases[l];
  }
  return h;
}

namespace {

Mlp init_mlp(const std::vector<int>& widths, Rng& rng) {
  Mlp mlp;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = 1.0 / std::sqrt(double(fan_in));
    Mat w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Vec::Zero(fan_out));
  }
  return mlp;
}

}  // namespace

AutoencoderStack init_stack(const MlpSpec& spec, int K, uint64_t seed) {
  if (K < 1) throw std::invalid_argument("init_stack: K >= 1");
  AutoencoderStack stack;
  stack.spec = spec;
  stack.K = K;
  stack.L = spec.output_width();
  stack.seed = seed;
  std::vector<int> reversed(spec.widths.rbegin(), spec.widths.rend());
  for (int k = 0; k < K; ++k) {
    Rng enc_rng = Rng::stream(seed, 2 * uint64_t(k));
    Rng dec_rng = Rng::stream(seed, 2 * uint64_t(k) + 1);
    stack.encoders.push_back(init_mlp(spec.widths, enc_rng));
    stack.decoders.push_back(init_mlp(reversed, dec_rng));
  }
  return stack;
}

Mat AutoencoderStack::encode(int k, const Mat& frames) const {
  if (k < 0 || k >= K) throw std::out_of_range("encode: derivative index");
  return encoders[k].forward(frames);
}

Mat AutoencoderStack::decode(int k, const Mat& latents) const {
  if (k < 0 || k >= K) throw std::out_of_range("decode: derivative index");
  return decoders[k].forward(latents);
}

Mat encoder_jvp(const AutoencoderStack& stack, int k, const Mat& points,
                const Mat& tangents) {
  if (k < 0 || k >= stack.K) throw std::out_of_range("jvp: derivative index");
  if (points.rows() != tangents.rows() || points.cols() != tangents.cols())
    throw ShapeError("jvp: tangent shape must match point shape");
  const Mlp& enc = stack.encoders[k];
  Mat h = (enc.weights[0] * points).colwise() + enc.biases[0];
  Mat t = enc.weights[0] * tangents;
  for (size_t l = 1; l < enc.weights.size(); ++l) {
    t = t.cwiseProduct(h.array().cos().matrix());
    h = h.array().sin();
    t = enc.weights[l] * t;
    h = (enc.weights[l] * h).colwise() + enc.biases[l];
  }
  return t;
}

StackVars register_stack(Tape& tape, const AutoencoderStack& stack) {
  StackVars vars;
  auto reg = [&tape](const Mlp& mlp) {
    MlpVars mv;
    for (size_t l = 0; l < mlp.weights.size(); ++l) {
      mv.weights.push_back(tape.leaf(mlp.weights[l]));
      mv.biases.push_back(tape.leaf(mlp.biases[l]));
    }
    return mv;
  };
  for (int k = 0; k < stack.K; ++k) {
    vars.enc.push_back(reg(stack.encoders[k]));
    vars.dec.push_back(reg(stack.decoders[k]));
  }
  return vars;
}

Var encode_on_tape(Tape& tape, const MlpVars& mlp, Var x,
                   std::vector<Var>* preacts) {
  Var h = x;
  const size_t n = mlp.weights.size();
  for (size_t l = 0; l < n; ++l) {
    h = tape.add_colvec(tape.matmul(mlp.weights[l], h), mlp.biases[l]);
    if (l + 1 < n) {
      if (preacts) preacts->push_back(h);
      h = tape.sin(h);
    }
  }
  return h;
}

Var decode_on_tape(Tape& tape, const MlpVars& mlp, Var z) {
  return encode_on_tape(tape, mlp, z, nullptr);
}

Var encoder_jvp_on_tape(Tape& tape, const MlpVars& mlp,
                        const std::vector<Var>& preacts, Var tangents) {
  const size_t n = mlp.weights.size();
  if (preacts.size() + 1 != n)
    throw ShapeError("encoder_jvp_on_tape: preactivation count");
  Var t = tape.matmul(mlp.weights[0], tangents);
  for (size_t l = 1; l < n; ++l) {
    t = tape.cwise_mul(t, tape.cos(preacts[l - 1]));
    t = tape.matmul(mlp.weights[l], t);
  }
  return t;
}

void stack_to_container(const AutoencoderStack& stack, long epoch,
                        Container& c) {
  c.header["kind"] = "autoencoder_stack";
  c.header["spec"] = stack.spec.str();
  c.header["K"] = stack.K;
  c.header["L"] = stack.L;
  c.header["seed"] = stack.seed;
  c.header["epoch"] = epoch;
  for (int k = 0; k < stack.K; ++k) {
    const std::string p = "ae" + std::to_string(k);
    for (size_t l = 0; l < stack.encoders[k].weights.size(); ++l) {
      c.add(p + "_enc_w" + std::to_string(l), stack.encoders[k].weights[l]);
      c.add(p + "_enc_b" + std::to_string(l), stack.encoders[k].biases[l]);
    }
    for (size_t l = 0; l < stack.decoders[k].weights.size(); ++l) {
      c.add(p + "_dec_w" + std::to_string(l), stack.decoders[k].weights[l]);
      c.add(p + "_dec_b" + std::to_string(l), stack.decoders[k].biases[l]);
    }
  }
}

AutoencoderStack stack_from_container(const Container& c) {
  AutoencoderStack stack;
  stack.spec = MlpSpec::parse(c.header.at("spec").get<std::string>());
  stack.K = c.header.at("K").get<int>();
  stack.L = c.header.at("L").get<int>();
  stack.seed = c.header.at("seed").get<uint64_t>();
  for (int k = 0; k < stack.K; ++k) {
    const std::string p = "ae" + std::to_string(k);
    Mlp enc, dec;
    for (int l = 0; l + 1 < int(stack.spec.widths.size()); ++l) {
      enc.weights.push_back(c.get(p + "_enc_w" + std::to_string(l)));
      enc.biases.push_back(c.get(p + "_enc_b" + std::to_string(l)));
      dec.weights.push_back(c.get(p + "_dec_w" + std::to_string(l)));
      dec.biases.push_back(c.get(p + "_dec_b" + std::to_string(l)));
    }
    stack.encoders.push_back(std::move(enc));
    stack.decoders.push_back(std::move(dec));
  }
  return stack;
}

}  // namespace hlasdi
