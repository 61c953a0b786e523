#pragma once

/// \file
/// Passenger requests, trip-file ingestion, synthetic Poisson demand and the
/// per-epoch batches consumed by the dispatch loop.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "neuradp/common.hpp"
#include "neuradp/roadnet.hpp"

namespace neuradp {

/// Quality constraints: maximum pickup delay and maximum detour delay.
struct DelayConstraints {
  Seconds tau = 300.0;
  Seconds lambda = 600.0;
};

struct Request {
  RequestId id = 0;
  Location origin = kNoLocation;
  Location destination = kNoLocation;
  int arrival_epoch = 0;
  /// Wall time of the epoch boundary at which the request is batched.
  Seconds arrival_time = 0.0;
  Seconds direct_time = 0.0;
  Seconds pickup_deadline = 0.0;
  Seconds dropoff_deadline = 0.0;

  [[nodiscard]] bool valid() const {
    return origin != destination && direct_time > 0.0 && pickup_deadline < dropoff_deadline;
  }
};

/// Deadlines are measured from the epoch boundary (epoch * delta).
inline Request make_request(RequestId id, Location origin, Location destination, int epoch,
                            Seconds delta, const RoadNetwork& net, const DelayConstraints& delays) {
  if (origin == destination) throw ContractError("request origin equals destination");
  Request r;
  r.id = id;
  r.origin = origin;
  r.destination = destination;
  r.arrival_epoch = epoch;
  r.arrival_time = static_cast<Seconds>(epoch) * delta;
  r.direct_time = net.travel_time(origin, destination);
  r.pickup_deadline = r.arrival_time + delays.tau;
  r.dropoff_deadline = r.arrival_time + delays.tau + r.direct_time + delays.lambda;
  return r;
}

struct EpochBatch {
  int epoch = 0;
  std::vector<Request> requests;
};

/// Batches indexed by epoch, contiguous from epoch 0.
using DemandStream = std::vector<EpochBatch>;

struct IngestResult {
  DemandStream batches;
  std::size_t accepted = 0;
  std::size_t dropped_degenerate = 0;
  std::size_t malformed = 0;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = (b == std::string::npos) ? std::string{} : s.substr(b, e - b + 1);
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    // std::from_chars for doubles is not available on every toolchain we build with.
    try {
      std::size_t used = 0;
      value = static_cast<T>(std::stod(s, &used));
      if (used != s.size()) return std::nullopt;
    } catch (...) {
      return std::nullopt;
    }
  } else {
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
  }
  return value;
}

inline void place_in_batches(DemandStream& stream, const Request& r) {
  if (stream.size() <= static_cast<std::size_t>(r.arrival_epoch)) {
    const std::size_t old = stream.size();
    stream.resize(static_cast<std::size_t>(r.arrival_epoch) + 1);
    for (std::size_t e = old; e < stream.size(); ++e) stream[e].epoch = static_cast<int>(e);
  }
  stream[r.arrival_epoch].requests.push_back(r);
}

}  // namespace detail

/// Reads CSV rows `pickup_time_s,origin_node,dest_node` (header required).
/// Nodes outside the retained network map to their nearest retained location.
inline IngestResult ingest_trips(std::istream& in, const RoadNetwork& net, Seconds delta,
                                 const DelayConstraints& delays) {
  if (!(delta > 0.0)) throw ContractError("epoch duration must be positive");
  IngestResult result;
  std::string line;
  if (!std::getline(in, line)) return result;
  const auto header = detail::split_csv(line);
  if (header.size() != 3 || header[0] != "pickup_time_s" || header[1] != "origin_node" ||
      header[2] != "dest_node") {
    throw ConfigError("trip file header must be `pickup_time_s,origin_node,dest_node`");
  }
  RequestId next_id = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cols = detail::split_csv(line);
    if (cols.size() != 3) {
      ++result.malformed;
      continue;
    }
    const auto t = detail::parse_number<double>(cols[0]);
    const auto o = detail::parse_number<std::int64_t>(cols[1]);
    const auto d = detail::parse_number<std::int64_t>(cols[2]);
    if (!t || !o || !d || *t < 0.0 || !std::isfinite(*t)) {
      ++result.malformed;
      continue;
    }
    const auto lo = net.nearest_retained(*o);
    const auto ld = net.nearest_retained(*d);
    if (!lo || !ld) {
      ++result.malformed;
      continue;
    }
    if (*lo == *ld) {
      ++result.dropped_degenerate;
      continue;
    }
    const int epoch = static_cast<int>(std::floor(*t / delta));
    detail::place_in_batches(result.batches,
                             make_request(next_id++, *lo, *ld, epoch, delta, net, delays));
    ++result.accepted;
  }
  return result;
}

inline IngestResult ingest_trips(const std::string& path, const RoadNetwork& net, Seconds delta,
                                 const DelayConstraints& delays) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trip file " + path);
  return ingest_trips(in, net, delta, delays);
}

/// Piecewise-constant mean arrival count per epoch; epochs not covered have rate 0.
struct RateProfile {
  struct Segment {
    int begin = 0;  // inclusive
    int end = 0;    // exclusive
    double mean = 0.0;
  };
  std::vector<Segment> segments;

  static RateProfile constant(int horizon, double mean) { return {{{0, horizon, mean}}}; }

  [[nodiscard]] double rate(int epoch) const {
    for (const auto& s : segments)
      if (epoch >= s.begin && epoch < s.end) return s.mean;
    return 0.0;
  }
};

/// Relative weights for drawing request origins and destinations.
struct SpatialWeights {
  std::vector<double> origin;       // empty = uniform
  std::vector<double> destination;  // empty = uniform

  /// Weight 1 + amplitude * exp(-tt(hotspot, loc) / scale) per location.
  static std::vector<double> hotspot(const RoadNetwork& net, Location center, double amplitude,
                                     Seconds scale) {
    std::vector<double> w(net.size(), 1.0);
    if (center == kNoLocation) return w;
    for (std::size_t l = 0; l < net.size(); ++l) {
      w[l] += amplitude * std::exp(-net.travel_time(center, static_cast<Location>(l)) / scale);
    }
    return w;
  }
};

struct DemandOptions {
  int horizon_epochs = 0;
  RateProfile profile;
  SpatialWeights spatial;
  Seconds delta = 60.0;
  DelayConstraints delays;
  std::uint64_t seed = 0;
};

/// Poisson arrivals per epoch. Each epoch draws from its own stream derived from
/// (seed, epoch), so a batch does not depend on earlier epochs' draws.
inline DemandStream generate_demand(const RoadNetwork& net, const DemandOptions& opt) {
  if (net.size() < 2) throw ContractError("demand generation needs at least two locations");
  auto make_dist = [&](const std::vector<double>& w) {
    if (w.empty()) return std::discrete_distribution<Location>(net.size(), 0.0, 1.0, [](double) { return 1.0; });
    if (w.size() != net.size()) throw ContractError("spatial weights size mismatch");
    return std::discrete_distribution<Location>(w.begin(), w.end());
  };
  auto origin_dist = make_dist(opt.spatial.origin);
  auto dest_dist = make_dist(opt.spatial.destination);

  DemandStream stream(static_cast<std::size_t>(std::max(0, opt.horizon_epochs)));
  RequestId next_id = 0;
  for (int e = 0; e < opt.horizon_epochs; ++e) {
    stream[e].epoch = e;
    const double mean = opt.profile.rate(e);
    if (mean < 0.0) throw ContractError("negative demand rate");
    if (mean == 0.0) continue;
    Rng rng(derive_seed(opt.seed, "demand-epoch", static_cast<std::uint64_t>(e)));
    std::poisson_distribution<int> count_dist(mean);
    const int count = count_dist(rng);
    for (int k = 0; k < count; ++k) {
      const Location o = origin_dist(rng);
      Location d = dest_dist(rng);
      while (d == o) d = dest_dist(rng);
      stream[e].requests.push_back(make_request(next_id++, o, d, e, opt.delta, net, opt.delays));
    }
  }
  return stream;
}

inline std::size_t total_requests(const DemandStream& stream) {
  std::size_t n = 0;
  for (const auto& b : stream) n += b.requests.size();
  return n;
}

}  // namespace neuradp
