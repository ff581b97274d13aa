/*
 * Copyright 2026 The mobcausal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mobcausal/eval/metrics.hpp"

#include <cmath>
#include <fstream>

#include "mobcausal/errors.hpp"

namespace mobcausal::eval {

template <typename T>
std::size_t rank_of_target(std::span<const T> logits, std::size_t target) {
  if (target >= logits.size()) {
    throw LabelError("target " + std::to_string(target) +
                     " out of range for " + std::to_string(logits.size()) +
                     " logits");
  }
  const T score = logits[target];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] > score || (logits[i] == score && i < target)) ++rank;
  }
  return rank;
}

template std::size_t rank_of_target<float>(std::span<const float>, std::size_t);
template std::size_t rank_of_target<double>(std::span<const double>,
                                            std::size_t);

Metrics metrics_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw UndefinedMetricsError("metrics over zero samples");
  if (k == 0) throw UsageError("k must be positive");
  Metrics m;
  for (std::size_t rank : ranks) {
    if (rank == 0) throw ContractError("ranks start at 1");
    if (rank > k) continue;
    m.recall += 1.0;
    m.mrr += 1.0 / static_cast<double>(rank);
    m.ndcg += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  }
  const auto n = static_cast<double>(ranks.size());
  m.recall /= n;
  m.mrr /= n;
  m.ndcg /= n;
  return m;
}

namespace {

ScopeMetrics scope_metrics(std::string name,
                           const std::vector<std::size_t>& ranks,
                           const std::vector<std::size_t>& ks) {
  ScopeMetrics s;
  s.scope = std::move(name);
  s.count = ranks.size();
  if (!ranks.empty()) {
    for (std::size_t k : ks) s.at[k] = metrics_at_k(ranks, k);
  }
  return s;
}

nlohmann::json scope_json(const ScopeMetrics& s) {
  nlohmann::json j = {{"scope", s.scope}, {"count", s.count}};
  nlohmann::json at = nlohmann::json::object();
  for (const auto& [k, m] : s.at) {
    at[std::to_string(k)] = {{"recall", m.recall}, {"mrr", m.mrr}, {"ndcg", m.ndcg}};
  }
  j["metrics"] = at;
  return j;
}

}  // namespace

MetricsReport build_report(std::span<const RankedSample> ranked,
                           const std::vector<std::size_t>& ks,
                           const data::Vocab& categories) {
  std::vector<std::size_t> all, t1, t2;
  std::vector<std::vector<std::size_t>> per_category(categories.size());
  for (const auto& r : ranked) {
    all.push_back(r.rank);
    (r.stratum == stratify::Stratum::kT1 ? t1 : t2).push_back(r.rank);
    if (r.category < per_category.size()) per_category[r.category].push_back(r.rank);
  }
  MetricsReport report;
  report.ks = ks;
  report.overall = scope_metrics("overall", all, ks);
  report.t1 = scope_metrics("T1", t1, ks);
  report.t2 = scope_metrics("T2", t2, ks);
  for (std::uint32_t c = 0; c < per_category.size(); ++c) {
    report.categories.push_back(
        scope_metrics("category:" + categories.raw(c), per_category[c], ks));
  }
  return report;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : categories) cats.push_back(scope_json(c));
  return {{"ks", ks},
          {"overall", scope_json(overall)},
          {"strata", {scope_json(t1), scope_json(t2)}},
          {"categories", cats}};
}

void MetricsReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "scope,k,count,recall,mrr,ndcg\n";
  out.precision(17);
  auto rows = [&](const ScopeMetrics& s) {
    for (const auto& [k, m] : s.at) {
      out << '"' << s.scope << "\"," << k << ',' << s.count << ',' << m.recall
          << ',' << m.mrr << ',' << m.ndcg << '\n';
    }
  };
  rows(overall);
  rows(t1);
  rows(t2);
  for (const auto& c : categories) rows(c);
}

}  // namespace mobcausal::eval
