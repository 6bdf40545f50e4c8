#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace memagent {

// Decoder dimensions for the dense FLOP estimate.
struct ModelShape {
  std::int64_t num_layers = 28;
  std::int64_t hidden_size = 3584;
  std::int64_t ffn_size = 18944;
  std::int64_t num_attention_heads = 28;
  std::int64_t num_kv_heads = 4;
  std::int64_t vocab_size = 152064;

  void validate() const;
  std::int64_t head_dim() const { return hidden_size / num_attention_heads; }

  static ModelShape qwen2_5_7b() { return {}; }
};

// Parameters touched per token:
//   attn  = hidden * (heads*hd + 2*kv_heads*hd + heads*hd)
//   mlp   = 3 * hidden * ffn
//   embed = 2 * vocab * hidden           (input embedding + lm head)
//   N     = layers * (attn + mlp) + embed
// flops(seq) = 6 * N * seq + 12 * seq^2 * hd * heads * layers
// The factor 6 counts forward and backward passes, as in the estimator this
// mirrors; ratios are unaffected.
double flops_linear(const ModelShape& shape, double seq_len);
double flops_attention(const ModelShape& shape, double seq_len);
double flops_dense(const ModelShape& shape, double seq_len);

struct Stage {
  std::string label;  // "init", "update", "final"
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;

  std::int64_t total() const { return input_tokens + output_tokens; }
};

inline constexpr std::int64_t kUpdateOverhead = 200;
inline constexpr std::int64_t kFinalOverhead = 100;

struct StagePlan {
  std::int64_t q = 1024, o = 1024, N = 5000, c = 0;
  std::int64_t k = 0;
  std::vector<Stage> stages;
};

// [init (q+200, o)] + k x [update (q+200+N, o)] + [final (q+100, o)], k = ceil(c/N).
StagePlan plan_memagent(std::int64_t q, std::int64_t o, std::int64_t N, std::int64_t c);

double memagent_flops(const ModelShape& shape, const StagePlan& plan);
// Full-context baseline evaluated at seq = q + c + o.
double baseline_flops(const ModelShape& shape, std::int64_t q, std::int64_t o, std::int64_t c);

struct CostRow {
  std::int64_t c = 0;
  double baseline = 0;
  double memagent = 0;
  double ratio = 0;  // baseline / memagent
};

std::vector<CostRow> compare(const ModelShape& shape, std::int64_t q, std::int64_t o, std::int64_t N,
                             const std::vector<std::int64_t>& c_grid);

// 8K, 16K, ..., 4M.
std::vector<std::int64_t> default_cost_grid();

// Smallest grid c at which memagent is cheaper, or -1.
std::int64_t crossover(const std::vector<CostRow>& rows);

std::string cost_csv(const std::vector<CostRow>& rows);
std::string cost_svg(const std::vector<CostRow>& rows, const std::string& title);

}  // namespace memagent
