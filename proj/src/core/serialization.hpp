#pragma once

#include <string>

#include "calibration.hpp"
#include "json.hpp"
#include "metric_family.hpp"
#include "variational.hpp"

namespace neckcalib {

using Json = nlohmann::json;

/// NeckSpec <-> config JSON: {id, n, k, t, profiles, fiber_metric, fiber_domain, geometry}.
/// Malformed documents raise ErrorKind::config; semantic problems keep the kind
/// raised by the NeckSpec constructor.
NeckSpec spec_from_json(const Json& j);
Json spec_to_json(const NeckSpec& spec);

Json geometry_to_json(const Geometry& geom);
Geometry geometry_from_json(const Json& j);

/// Finite doubles as numbers, everything else as null.
Json number_or_null(double x);

Json frame_to_json(const TangentFrame& frame);
/// {spec_id, samples, max_ratio, argmax {point, vectors}, violations [...], seed, wall_time_s}
Json comass_report_to_json(const ComassReport& report);
Json search_result_to_json(const SearchResult& result);
Json probe_report_to_json(const ProbeReport& report);
/// {baseline_volume, entries [{amplitudes, volume, excess}], min_excess, defect}
Json volume_report_to_json(const VolumeReport& report);

}  // namespace neckcalib
