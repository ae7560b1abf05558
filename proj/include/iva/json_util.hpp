#pragma once

#include <nlohmann/json.hpp>

#include "iva/decimal.hpp"
#include "iva/response.hpp"

namespace iva {

using ojson = nlohmann::ordered_json;

/// Integer tokens become JSON integers, everything else a JSON double. Canonical
/// decimal tokens survive the round trip unchanged.
ojson decimal_to_json(const Decimal& d);
Decimal decimal_from_json(const ojson& j);

ojson action_to_json(const Action& a);
Action action_from_json(const ojson& j);

ojson trace_to_json(const std::vector<TracePoint>& trace);
std::vector<TracePoint> trace_from_json(const ojson& j);

}  // namespace iva
