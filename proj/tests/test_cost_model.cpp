#include <doctest.h>

#include <cmath>

#include "memagent/cost_model.hpp"

using namespace memagent;

namespace {

ModelShape toy_shape() {
  ModelShape s;
  s.num_layers = 2;
  s.hidden_size = 64;
  s.ffn_size = 256;
  s.vocab_size = 1000;
  s.num_attention_heads = 4;
  s.num_kv_heads = 4;
  return s;
}

}  // namespace

TEST_CASE("stage plan golden values") {
  const auto p = plan_memagent(1024, 1024, 5000, 10000);
  CHECK(p.k == 2);
  std::vector<std::int64_t> totals;
  for (const auto& s : p.stages) totals.push_back(s.total());
  CHECK(totals == std::vector<std::int64_t>{2248, 7248, 7248, 2148});
  CHECK(p.stages.front().label == "init");
  CHECK(p.stages.back().label == "final");
  CHECK(plan_memagent(1024, 1024, 5000, 5000).k == 1);
  CHECK(plan_memagent(1024, 1024, 5000, 5001).k == 2);
}

TEST_CASE("toy shape matches a hand computation") {
  // attn 64*256 = 16384, mlp 3*64*256 = 49152, embed 2*1000*64 = 128000,
  // N = 2*(16384+49152) + 128000 = 259072.
  // linear = 6*259072*128 = 198967296; attention = 12*128^2*16*4*2 = 25165824.
  CHECK(flops_linear(toy_shape(), 128) == 198967296.0);
  CHECK(flops_attention(toy_shape(), 128) == 25165824.0);
  CHECK(flops_dense(toy_shape(), 128) == 224133120.0);
}

TEST_CASE("one token costs the linear term plus its own attention") {
  const auto s = ModelShape::qwen2_5_7b();
  CHECK(flops_dense(s, 1) == flops_linear(s, 1) + flops_attention(s, 1));
  CHECK(flops_attention(s, 1) == 12.0 * s.head_dim() * s.num_attention_heads * s.num_layers);
  CHECK_THROWS(flops_dense(s, 0));
}

TEST_CASE("asymptotic doubling ratios") {
  const auto s = ModelShape::qwen2_5_7b();
  const double n = 1e9;
  CHECK(flops_dense(s, 2 * n) / flops_dense(s, n) == doctest::Approx(4.0).epsilon(0.01));
  const auto rows = compare(s, 1024, 1024, 5000, default_cost_grid());
  const auto& a = rows[rows.size() - 2];
  const auto& b = rows.back();
  CHECK(b.baseline / a.baseline == doctest::Approx(4.0).epsilon(0.05));
  CHECK(b.memagent / a.memagent == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("memagent cost jumps only at multiples of N") {
  const auto s = toy_shape();
  const std::int64_t N = 500;
  double prev = memagent_flops(s, plan_memagent(64, 64, N, 1));
  for (std::int64_t c = 2; c <= 3000; ++c) {
    const double cur = memagent_flops(s, plan_memagent(64, 64, N, c));
    if ((c - 1) % N == 0) {
      CHECK(cur > prev);
    } else {
      CHECK(cur == prev);
    }
    prev = cur;
    CHECK(static_cast<std::int64_t>(plan_memagent(64, 64, N, c).stages.size()) == (c + N - 1) / N + 2);
  }
}

TEST_CASE("both curves increase on the grid") {
  const auto rows = compare(ModelShape::qwen2_5_7b(), 1024, 1024, 5000, default_cost_grid());
  CHECK(rows.front().c == 8192);
  CHECK(rows.back().c == 4194304);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].baseline > rows[i - 1].baseline);
    CHECK(rows[i].memagent > rows[i - 1].memagent);
  }
  CHECK_THROWS(compare(ModelShape::qwen2_5_7b(), 1024, 1024, 5000, {16384, 8192}));
}

TEST_CASE("per-token memagent cost is flat past 64K") {
  const auto rows = compare(ModelShape::qwen2_5_7b(), 1024, 1024, 5000, default_cost_grid());
  double lo = INFINITY, hi = 0;
  for (const auto& r : rows) {
    if (r.c <= 65536) continue;
    const double per = r.memagent / static_cast<double>(r.c);
    lo = std::min(lo, per);
    hi = std::max(hi, per);
  }
  CHECK(hi / lo <= 1.05);
}

TEST_CASE("crossover scan") {
  const auto rows = compare(ModelShape::qwen2_5_7b(), 1024, 1024, 5000, default_cost_grid());
  const auto x = crossover(rows);
  REQUIRE(x > 0);
  for (const auto& r : rows) CHECK((r.memagent < r.baseline) == (r.c >= x));
  const auto toy = compare(toy_shape(), 1024, 1024, 5000, default_cost_grid());
  CHECK(crossover(toy) > 0);
  CHECK(crossover({}) == -1);
}

TEST_CASE("csv output") {
  const auto csv = cost_csv(compare(toy_shape(), 1024, 1024, 5000, {8192, 16384}));
  CHECK(csv.rfind("c,baseline,memagent,ratio\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(cost_svg(compare(toy_shape(), 1024, 1024, 5000, {8192, 16384}), "t").find("<svg") != std::string::npos);
}
