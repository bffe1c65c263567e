#pragma once

// One-line JSON result records. Field order is fixed so that parsing a record
// and printing it again reproduces the same bytes.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "usimrank/error.hpp"
#include "usimrank/graph.hpp"
#include "usimrank/simrank.hpp"

namespace usimrank {

struct ResultRecord {
  double value = 0.0;
  std::string method;
  int n = 0;
  double c = 0.0;
  std::optional<std::uint64_t> samples;  // "N"
  std::optional<int> exact_steps;        // "l"
  std::optional<std::uint64_t> seed;
  std::optional<double> bound;
  double wall_ms = 0.0;
  std::string graph;
  Vertex u = 0;
  Vertex v = 0;

  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

inline ResultRecord make_record(const SimEstimate& e, std::optional<std::uint64_t> seed, std::string graph, Vertex u,
                                Vertex v) {
  return {e.value,
          std::string(to_string(e.method)),
          e.n,
          e.c,
          e.samples,
          e.exact_steps,
          seed,
          e.bound,
          std::chrono::duration<double, std::milli>(e.wall_time).count(),
          std::move(graph),
          u,
          v};
}

namespace detail {

template <class T>
nlohmann::ordered_json optional_json(const std::optional<T>& x) {
  return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
}

template <class T>
std::optional<T> optional_field(const nlohmann::ordered_json& j, const char* key) {
  const auto& x = j.at(key);
  if (x.is_null()) return std::nullopt;
  return x.get<T>();
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const ResultRecord& r) {
  nlohmann::ordered_json j;
  j["value"] = r.value;
  j["method"] = r.method;
  j["n"] = r.n;
  j["c"] = r.c;
  j["N"] = detail::optional_json(r.samples);
  j["l"] = detail::optional_json(r.exact_steps);
  j["seed"] = detail::optional_json(r.seed);
  j["bound"] = detail::optional_json(r.bound);
  j["wall_ms"] = r.wall_ms;
  j["graph"] = r.graph;
  j["u"] = r.u;
  j["v"] = r.v;
  return j;
}

inline std::string format_record(const ResultRecord& r) { return to_json(r).dump(); }

inline ResultRecord parse_record(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
    ResultRecord r;
    r.value = j.at("value").get<double>();
    r.method = j.at("method").get<std::string>();
    r.n = j.at("n").get<int>();
    r.c = j.at("c").get<double>();
    r.samples = detail::optional_field<std::uint64_t>(j, "N");
    r.exact_steps = detail::optional_field<int>(j, "l");
    r.seed = detail::optional_field<std::uint64_t>(j, "seed");
    r.bound = detail::optional_field<double>(j, "bound");
    r.wall_ms = j.at("wall_ms").get<double>();
    r.graph = j.at("graph").get<std::string>();
    r.u = j.at("u").get<Vertex>();
    r.v = j.at("v").get<Vertex>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed result record: ") + e.what());
  }
}

}  // namespace usimrank
