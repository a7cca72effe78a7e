#include "lfa/allocator.hpp"

#include <algorithm>
#include <cmath>

namespace lfa {
namespace {

nlohmann::ordered_json schedule_to_json(const ExplorationSchedule& s) {
  nlohmann::ordered_json j;
  j["epsilon0"] = s.epsilon0;
  j["epsilon_min"] = s.epsilon_min;
  j["decay"] = s.decay;
  j["episode"] = s.episode;
  return j;
}

ExplorationSchedule schedule_from_json(const nlohmann::json& j) {
  ExplorationSchedule s;
  s.epsilon0 = j.at("epsilon0").get<double>();
  s.epsilon_min = j.at("epsilon_min").get<double>();
  s.decay = j.at("decay").get<double>();
  s.episode = j.at("episode").get<std::uint64_t>();
  return s;
}

nlohmann::ordered_json rng_to_json(const CountingRng& rng) {
  nlohmann::ordered_json j;
  j["seed"] = rng.seed();
  j["count"] = rng.draw_count();
  return j;
}

CountingRng rng_from_json(const nlohmann::json& j) {
  return CountingRng::restore(j.at("seed").get<std::uint64_t>(),
                              j.at("count").get<std::uint64_t>());
}

}  // namespace

double epsilon_at(const ExplorationSchedule& schedule, std::uint64_t episode) {
  double eps =
      schedule.epsilon0 * std::pow(schedule.decay, static_cast<double>(episode));
  return std::max(schedule.epsilon_min, eps);
}

std::array<double, kSlotCount> TabularQ::q_values(const TransceiverId& id) {
  auto it = table_.find(id.key());
  if (it == table_.end()) return std::array<double, kSlotCount>{};
  return it->second;
}

void TabularQ::update(const TransceiverId& id, FrequencySlot slot,
                      double reward) {
  auto& row = table_[id.key()];  // fresh rows start at zero
  double& q = row[slot.index()];
  q += alpha_ * (reward - q);
}

void TabularQ::set_values(const TransceiverId& id,
                          const std::array<double, kSlotCount>& values) {
  table_[id.key()] = values;
}

FnnQ::FnnQ(double step, std::uint64_t init_seed)
    : step_(step), init_rng_(init_seed) {
  // Shared parameters are drawn up front in a fixed order; input rows are
  // drawn lazily as transceivers appear.
  for (auto& v : b1_) v = (init_rng_.next_unit() * 2.0 - 1.0) * kInitRange;
  for (auto& row : w2_)
    for (auto& v : row) v = (init_rng_.next_unit() * 2.0 - 1.0) * kInitRange;
  for (auto& v : b2_) v = (init_rng_.next_unit() * 2.0 - 1.0) * kInitRange;
}

int FnnQ::row_for(const TransceiverId& id) {
  auto it = index_.find(id.key());
  if (it != index_.end()) return it->second;
  int row = static_cast<int>(order_.size());
  order_.push_back(id.key());
  index_.emplace(id.key(), row);
  std::array<double, kHidden> weights;
  for (auto& v : weights)
    v = (init_rng_.next_unit() * 2.0 - 1.0) * kInitRange;
  w1_.push_back(weights);
  return row;
}

std::array<double, kSlotCount> FnnQ::forward(
    int row, std::array<double, kHidden>* hidden) const {
  std::array<double, kHidden> act;
  for (int h = 0; h < kHidden; ++h)
    act[h] = std::max(0.0, w1_[row][h] + b1_[h]);
  std::array<double, kSlotCount> out = b2_;
  for (int h = 0; h < kHidden; ++h) {
    if (act[h] == 0.0) continue;
    for (int s = 0; s < kSlotCount; ++s) out[s] += w2_[h][s] * act[h];
  }
  if (hidden) *hidden = act;
  return out;
}

std::array<double, kSlotCount> FnnQ::q_values(const TransceiverId& id) {
  return forward(row_for(id), nullptr);
}

void FnnQ::update(const TransceiverId& id, FrequencySlot slot, double reward) {
  int row = row_for(id);
  std::array<double, kHidden> act;
  auto out = forward(row, &act);
  int s = slot.index();
  double err = out[s] - reward;  // dL/dq for L = 1/2 (q - r)^2
  // Gradients are taken at the current parameters, then applied together.
  std::array<double, kHidden> dhidden;
  for (int h = 0; h < kHidden; ++h) dhidden[h] = err * w2_[h][s];
  b2_[s] -= step_ * err;
  for (int h = 0; h < kHidden; ++h) w2_[h][s] -= step_ * err * act[h];
  for (int h = 0; h < kHidden; ++h) {
    if (act[h] == 0.0) continue;  // ReLU gate
    b1_[h] -= step_ * dhidden[h];
    w1_[row][h] -= step_ * dhidden[h];  // one-hot input: d/dw1 = dhidden
  }
}

QModel QModel::tabular(double alpha, ExplorationSchedule schedule,
                       std::uint64_t seed) {
  return QModel(std::make_unique<TabularQ>(alpha), schedule, seed,
                CountingRng(mix_seed(seed, hash_name("select"))));
}

QModel QModel::fnn(double step, ExplorationSchedule schedule,
                   std::uint64_t seed) {
  return QModel(
      std::make_unique<FnnQ>(step, mix_seed(seed, hash_name("fnn-init"))),
      schedule, seed, CountingRng(mix_seed(seed, hash_name("select"))));
}

FrequencySlot QModel::select_slot(const TransceiverId& ingress,
                                  const TransceiverId& egress,
                                  double epsilon) {
  if (epsilon > 0.0 && rng_.next_unit() < epsilon)
    return FrequencySlot(rng_.next_int(kSlotCount));
  auto sum = pair_values(ingress, egress);
  int best = 0;
  for (int s = 1; s < kSlotCount; ++s)
    if (sum[s] > sum[best]) best = s;  // strict: ties keep the lowest index
  return FrequencySlot(best);
}

std::array<double, kSlotCount> QModel::pair_values(
    const TransceiverId& ingress, const TransceiverId& egress) {
  auto a = backend_->q_values(ingress);
  auto b = backend_->q_values(egress);
  for (int s = 0; s < kSlotCount; ++s) a[s] += b[s];
  return a;
}

std::vector<std::string> QModel::known_transceivers() const {
  if (backend_->kind() == QBackendKind::Tabular) {
    std::vector<std::string> keys;
    for (const auto& [key, _] : static_cast<TabularQ&>(*backend_).table())
      keys.push_back(key);
    return keys;
  }
  return static_cast<FnnQ&>(*backend_).known_transceivers();
}

void QModel::update(const TransceiverId& id, FrequencySlot slot,
                    double config_time_s) {
  if (!(config_time_s > 0.0))
    throw InvalidFeedback("config_time_s must be positive, got " +
                          std::to_string(config_time_s));
  backend_->update(id, slot, -config_time_s);
}

nlohmann::ordered_json QModel::save_json() const {
  nlohmann::ordered_json doc;
  doc["backend"] =
      backend_->kind() == QBackendKind::Tabular ? "tabular" : "fnn";
  doc["gamma"] = 0.0;
  doc["schedule"] = schedule_to_json(schedule_);
  doc["seed"] = seed_;
  doc["select_rng"] = rng_to_json(rng_);
  if (backend_->kind() == QBackendKind::Tabular) {
    auto& tab = static_cast<TabularQ&>(*backend_);
    doc["alpha"] = tab.alpha();
    nlohmann::ordered_json q = nlohmann::ordered_json::object();
    for (const auto& [key, row] : tab.table()) q[key] = row;
    doc["q"] = std::move(q);
  } else {
    auto& fnn = static_cast<FnnQ&>(*backend_);
    doc["step"] = fnn.step_;
    nlohmann::ordered_json weights;
    weights["hidden"] = FnnQ::kHidden;
    weights["init_rng"] = rng_to_json(fnn.init_rng_);
    weights["transceivers"] = fnn.order_;
    weights["w1"] = fnn.w1_;
    weights["b1"] = fnn.b1_;
    weights["w2"] = fnn.w2_;
    weights["b2"] = fnn.b2_;
    doc["weights"] = std::move(weights);
  }
  return doc;
}

QModel QModel::load(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptModel(std::string("model document is not valid JSON: ") +
                       e.what());
  }
  try {
    std::string backend = doc.at("backend").get<std::string>();
    auto schedule = schedule_from_json(doc.at("schedule"));
    auto seed = doc.at("seed").get<std::uint64_t>();
    auto rng = rng_from_json(doc.at("select_rng"));
    if (backend == "tabular") {
      auto tab = std::make_unique<TabularQ>(doc.at("alpha").get<double>());
      for (const auto& [key, row] : doc.at("q").items()) {
        auto values = row.get<std::vector<double>>();
        if (values.size() != kSlotCount)
          throw CorruptModel("q row for " + key + " has " +
                             std::to_string(values.size()) + " entries");
        std::array<double, kSlotCount> arr;
        std::copy(values.begin(), values.end(), arr.begin());
        auto slash = key.find('/');
        if (slash == std::string::npos)
          throw CorruptModel("q key is not whitebox/port: " + key);
        tab->set_values(
            TransceiverId{key.substr(0, slash), key.substr(slash + 1)}, arr);
      }
      return QModel(std::move(tab), schedule, seed, rng);
    }
    if (backend == "fnn") {
      const auto& w = doc.at("weights");
      if (w.at("hidden").get<int>() != FnnQ::kHidden)
        throw CorruptModel("unsupported hidden width " +
                           w.at("hidden").dump());
      auto fnn = std::make_unique<FnnQ>(doc.at("step").get<double>(), 0);
      fnn->init_rng_ = rng_from_json(w.at("init_rng"));
      fnn->order_ = w.at("transceivers").get<std::vector<std::string>>();
      for (std::size_t i = 0; i < fnn->order_.size(); ++i)
        fnn->index_[fnn->order_[i]] = static_cast<int>(i);
      fnn->w1_ =
          w.at("w1").get<std::vector<std::array<double, FnnQ::kHidden>>>();
      if (fnn->w1_.size() != fnn->order_.size())
        throw CorruptModel("w1 row count does not match transceiver list");
      fnn->b1_ = w.at("b1").get<std::array<double, FnnQ::kHidden>>();
      fnn->w2_ = w.at("w2")
                     .get<std::array<std::array<double, kSlotCount>,
                                     FnnQ::kHidden>>();
      fnn->b2_ = w.at("b2").get<std::array<double, kSlotCount>>();
      return QModel(std::move(fnn), schedule, seed, rng);
    }
    throw CorruptModel("unknown backend: " + backend);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptModel(std::string("model document missing fields: ") +
                       e.what());
  }
}

}  // namespace lfa
