#include "memagent/filter.hpp"

#include "memagent/parallel.hpp"
#include "memagent/templates.hpp"

namespace memagent {

FilterOutcome filter_known_questions(const std::vector<TaskInstance>& samples, Gateway& gateway,
                                     const Verifier& verifier, int attempts) {
  if (attempts < 1) throw std::invalid_argument("attempts must be >= 1");
  enum class Verdict { keep, drop, unfiltered };
  std::vector<Verdict> verdicts(samples.size(), Verdict::keep);

  parallel_for(samples.size(), static_cast<std::size_t>(gateway.max_in_flight()), [&](std::size_t i) {
    const auto prompt = render_answer_prompt(samples[i].question, kEmptyMemory);
    try {
      for (int a = 0; a < attempts; ++a) {
        if (verifier(gateway.complete(prompt).text, samples[i].answers) >= 1.0) {
          verdicts[i] = Verdict::drop;
          return;
        }
      }
    } catch (const GatewayError&) {
      verdicts[i] = Verdict::unfiltered;
    }
  });

  FilterOutcome out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    switch (verdicts[i]) {
      case Verdict::drop:
        out.dropped.push_back(samples[i]);
        break;
      case Verdict::unfiltered: {
        auto t = samples[i];
        t.tags.emplace_back(kUnfilteredTag);
        out.kept.push_back(std::move(t));
        ++out.unfiltered;
        break;
      }
      case Verdict::keep:
        out.kept.push_back(samples[i]);
        break;
    }
  }
  out.drop_rate = samples.empty() ? 0.0 : static_cast<double>(out.dropped.size()) / samples.size();
  return out;
}

}  // namespace memagent
