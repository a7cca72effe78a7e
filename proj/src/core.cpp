#include "lfa/core.hpp"

namespace lfa {

int slot_to_frequency(FrequencySlot slot) { return slot.frequency_ghz(); }

FrequencySlot frequency_to_slot(int frequency_ghz) {
  if (frequency_ghz < kBaseFrequencyGhz || frequency_ghz > kMaxFrequencyGhz ||
      (frequency_ghz - kBaseFrequencyGhz) % kGridGhz != 0) {
    throw InvalidFrequency("frequency " + std::to_string(frequency_ghz) +
                           " GHz is not on the " + std::to_string(kGridGhz) +
                           " GHz grid [" + std::to_string(kBaseFrequencyGhz) +
                           ", " + std::to_string(kMaxFrequencyGhz) + "]");
  }
  return FrequencySlot((frequency_ghz - kBaseFrequencyGhz) / kGridGhz);
}

}  // namespace lfa
