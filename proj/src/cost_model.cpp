#include "memagent/cost_model.hpp"

#include <cstdio>
#include <stdexcept>

#include "memagent/svg.hpp"

namespace memagent {

void ModelShape::validate() const {
  if (num_layers <= 0 || hidden_size <= 0 || ffn_size <= 0 || num_attention_heads <= 0 ||
      num_kv_heads <= 0 || vocab_size <= 0)
    throw std::invalid_argument("model shape fields must be positive");
  if (hidden_size % num_attention_heads != 0)
    throw std::invalid_argument("hidden_size must be divisible by num_attention_heads");
}

double flops_linear(const ModelShape& s, double seq_len) {
  const double hd = static_cast<double>(s.head_dim());
  const double hidden = static_cast<double>(s.hidden_size);
  const double q_size = static_cast<double>(s.num_attention_heads) * hd;
  const double kv_size = static_cast<double>(s.num_kv_heads) * hd;
  const double attn = hidden * (q_size + 2 * kv_size + q_size);
  const double mlp = 3.0 * hidden * static_cast<double>(s.ffn_size);
  const double embed = 2.0 * static_cast<double>(s.vocab_size) * hidden;
  const double n = static_cast<double>(s.num_layers) * (attn + mlp) + embed;
  return 6.0 * n * seq_len;
}

double flops_attention(const ModelShape& s, double seq_len) {
  return 12.0 * seq_len * seq_len * static_cast<double>(s.head_dim()) *
         static_cast<double>(s.num_attention_heads) * static_cast<double>(s.num_layers);
}

double flops_dense(const ModelShape& shape, double seq_len) {
  shape.validate();
  if (!(seq_len >= 1)) throw std::invalid_argument("seq_len must be >= 1");
  return flops_linear(shape, seq_len) + flops_attention(shape, seq_len);
}

StagePlan plan_memagent(std::int64_t q, std::int64_t o, std::int64_t N, std::int64_t c) {
  if (q <= 0 || o <= 0 || N <= 0 || c <= 0) throw std::invalid_argument("q, o, N and c must be positive");
  StagePlan plan;
  plan.q = q;
  plan.o = o;
  plan.N = N;
  plan.c = c;
  plan.k = (c + N - 1) / N;
  plan.stages.push_back({"init", q + kUpdateOverhead, o});
  for (std::int64_t i = 0; i < plan.k; ++i) plan.stages.push_back({"update", q + kUpdateOverhead + N, o});
  plan.stages.push_back({"final", q + kFinalOverhead, o});
  return plan;
}

double memagent_flops(const ModelShape& shape, const StagePlan& plan) {
  // Every update stage costs the same, so price it once.
  double total = 0;
  double update_cost = -1;
  for (const auto& st : plan.stages) {
    if (st.label == "update") {
      if (update_cost < 0) update_cost = flops_dense(shape, static_cast<double>(st.total()));
      total += update_cost;
    } else {
      total += flops_dense(shape, static_cast<double>(st.total()));
    }
  }
  return total;
}

double baseline_flops(const ModelShape& shape, std::int64_t q, std::int64_t o, std::int64_t c) {
  return flops_dense(shape, static_cast<double>(q + c + o));
}

std::vector<CostRow> compare(const ModelShape& shape, std::int64_t q, std::int64_t o, std::int64_t N,
                             const std::vector<std::int64_t>& c_grid) {
  for (std::size_t i = 1; i < c_grid.size(); ++i)
    if (c_grid[i] <= c_grid[i - 1]) throw std::invalid_argument("cost grid must be increasing");
  std::vector<CostRow> rows;
  for (auto c : c_grid) {
    CostRow r;
    r.c = c;
    r.baseline = baseline_flops(shape, q, o, c);
    r.memagent = memagent_flops(shape, plan_memagent(q, o, N, c));
    r.ratio = r.baseline / r.memagent;
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::int64_t> default_cost_grid() {
  std::vector<std::int64_t> g;
  for (std::int64_t c = 8192; c <= 4194304; c *= 2) g.push_back(c);
  return g;
}

std::int64_t crossover(const std::vector<CostRow>& rows) {
  for (const auto& r : rows)
    if (r.memagent < r.baseline) return r.c;
  return -1;
}

std::string cost_csv(const std::vector<CostRow>& rows) {
  std::string out = "c,baseline,memagent,ratio\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(r.c), r.baseline,
                  r.memagent, r.ratio);
    out += buf;
  }
  return out;
}

std::string cost_svg(const std::vector<CostRow>& rows, const std::string& title) {
  ChartSeries base{"baseline", {}, {}}, mem{"memagent", {}, {}};
  for (const auto& r : rows) {
    base.x.push_back(static_cast<double>(r.c));
    base.y.push_back(r.baseline);
    mem.x.push_back(static_cast<double>(r.c));
    mem.y.push_back(r.memagent);
  }
  ChartSpec spec;
  spec.title = title;
  spec.x_label = "context tokens";
  spec.y_label = "FLOPs";
  spec.log_x = spec.log_y = true;
  return render_line_chart(spec, {base, mem});
}

}  // namespace memagent
