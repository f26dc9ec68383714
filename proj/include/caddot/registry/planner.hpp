#pragma once

#include "caddot/registry/store.hpp"

namespace caddot::registry {

// ── Strategy planning (reason phase) ─────────────────────────────────────────
//
// Deterministic rule evaluation, highest priority first:
//
//   R2  a humidity sensor whose paired temperature sensor is faulty or absent
//       is put to sleep (frost detection is impossible without temperature)
//   R1  winter or night halves the base sampling interval (faster sampling)
//   R3  default: schedule-gated pushing with the record's base schedule
//
// Falls back to pull when a record carries no base schedule.

protocol::SensingStrategy plan_strategy(const SensorRecord& record, const Context& context);

}  // namespace caddot::registry
