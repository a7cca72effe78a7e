#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfa/core.hpp"
#include "lfa/rng.hpp"

namespace lfa {

class InvalidFeedback : public Error {
 public:
  using Error::Error;
};

class CorruptModel : public Error {
 public:
  using Error::Error;
};

/// Epsilon decays geometrically toward a floor; defaults land on the floor
/// right around episode 3000.
struct ExplorationSchedule {
  double epsilon0 = 1.0;
  double epsilon_min = 0.05;
  double decay = 0.999002;
  std::uint64_t episode = 0;
};

double epsilon_at(const ExplorationSchedule& schedule, std::uint64_t episode);

enum class QBackendKind { Tabular, Fnn };

/// Action values per transceiver over the 49 slots. Updates consume the
/// negative configuration time as reward.
class QBackend {
 public:
  virtual ~QBackend() = default;
  virtual QBackendKind kind() const = 0;
  virtual std::array<double, kSlotCount> q_values(const TransceiverId& id) = 0;
  virtual void update(const TransceiverId& id, FrequencySlot slot,
                      double reward) = 0;
};

class TabularQ : public QBackend {
 public:
  explicit TabularQ(double alpha = 0.1) : alpha_(alpha) {}

  QBackendKind kind() const override { return QBackendKind::Tabular; }
  std::array<double, kSlotCount> q_values(const TransceiverId& id) override;
  /// q[slot] += alpha * (reward - q[slot]); touches exactly one cell.
  void update(const TransceiverId& id, FrequencySlot slot,
              double reward) override;

  void set_values(const TransceiverId& id,
                  const std::array<double, kSlotCount>& values);
  double alpha() const { return alpha_; }
  const std::map<std::string, std::array<double, kSlotCount>>& table() const {
    return table_;
  }

 private:
  double alpha_;
  std::map<std::string, std::array<double, kSlotCount>> table_;
};

/// One-hidden-layer approximator: one-hot transceiver input (the input row is
/// drawn on first appearance), 32 rectified units, 49 linear outputs.
class FnnQ : public QBackend {
 public:
  static constexpr int kHidden = 32;
  static constexpr double kInitRange = 0.05;

  FnnQ(double step, std::uint64_t init_seed);

  QBackendKind kind() const override { return QBackendKind::Fnn; }
  std::array<double, kSlotCount> q_values(const TransceiverId& id) override;
  /// One gradient step on 1/2 * (q(id, slot) - reward)^2.
  void update(const TransceiverId& id, FrequencySlot slot,
              double reward) override;

  double step() const { return step_; }
  const std::vector<std::string>& known_transceivers() const { return order_; }

  friend class QModel;  // serialization

 private:
  int row_for(const TransceiverId& id);
  std::array<double, kSlotCount> forward(
      int row, std::array<double, kHidden>* hidden) const;

  double step_;
  CountingRng init_rng_;
  std::vector<std::string> order_;
  std::map<std::string, int> index_;
  std::vector<std::array<double, kHidden>> w1_;  // one row per transceiver
  std::array<double, kHidden> b1_{};
  std::array<std::array<double, kSlotCount>, kHidden> w2_{};
  std::array<double, kSlotCount> b2_{};
};

/// The allocator model: a value backend plus exploration schedule and the
/// seeded selection stream. Serializes to a single JSON document that
/// round-trips bit-exactly.
class QModel {
 public:
  static QModel tabular(double alpha, ExplorationSchedule schedule,
                        std::uint64_t seed);
  static QModel fnn(double step, ExplorationSchedule schedule,
                    std::uint64_t seed);

  /// Epsilon-greedy over q_ingress[s] + q_egress[s]; ties break to the
  /// lowest slot index. The same slot is applied to both endpoints.
  FrequencySlot select_slot(const TransceiverId& ingress,
                            const TransceiverId& egress, double epsilon);

  /// reward = -config_time_s. Throws InvalidFeedback unless time > 0.
  void update(const TransceiverId& id, FrequencySlot slot,
              double config_time_s);

  double current_epsilon() const {
    return epsilon_at(schedule_, schedule_.episode);
  }
  void advance_episode() { ++schedule_.episode; }

  const ExplorationSchedule& schedule() const { return schedule_; }
  QBackendKind kind() const { return backend_->kind(); }
  QBackend& backend() { return *backend_; }

  std::array<double, kSlotCount> pair_values(const TransceiverId& ingress,
                                             const TransceiverId& egress);

  /// Keys of every transceiver the backend has values for.
  std::vector<std::string> known_transceivers() const;

  nlohmann::ordered_json save_json() const;
  std::string save() const { return save_json().dump(2) + "\n"; }
  static QModel load(std::string_view text);

 private:
  QModel(std::unique_ptr<QBackend> backend, ExplorationSchedule schedule,
         std::uint64_t seed, CountingRng rng)
      : backend_(std::move(backend)),
        schedule_(schedule),
        seed_(seed),
        rng_(rng) {}

  std::unique_ptr<QBackend> backend_;
  ExplorationSchedule schedule_;
  std::uint64_t seed_;
  CountingRng rng_;
};

}  // namespace lfa
