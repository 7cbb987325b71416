#pragma once

// JSON documents for the public value types. Exact scalars travel as
// strings ("p/q", "a+b*sqrt2"); float scalars as "f:<double>".

#include <json.hpp>

#include "rank1/koopman.hpp"
#include "rank1/named.hpp"
#include "rank1/spectral.hpp"

namespace rank1 {

using Json = nlohmann::json;

Json to_json(const Scalar& s);
// Accepts strings and JSON integers.
Scalar scalar_from_json(const Json& j);

Json to_json(const SpacerMap& m);
SpacerMap spacer_from_json(const Json& j);

// {mode, h1, w1, stages:[...]} | {mode?, named:{kind, params}} | {mode?, symmetrized:<doc>}
Json to_json(const Schedule& s);
Schedule schedule_from_json(const Json& j);

// Rebuilds a schedule with a different arithmetic mode (float opt-in).
Schedule with_mode(const Schedule& s, ScalarMode mode);

Json to_json(const StepFunction& f);
StepFunction step_function_from_json(const Json& j);

Json to_json(const CorrelationResult& c);
Json to_json(const SpectralEstimate& e);
Json complex_json(Complex z);
Complex complex_from_json(const Json& j);

}  // namespace rank1
