// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// Built-in design-of-experiments planners.
//
// Everything here is a pure function of explicit state so proposals can be
// replayed from a journal and reproduced bit-for-bit by modules written in
// other languages. Built-in planners only ever propose points of the
// discretized grid.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aeos/error.hpp"
#include "aeos/schema.hpp"
#include "aeos/value.hpp"

namespace aeos {

using ParameterSpace = std::vector<ParameterSpec>;

__extension__ using uint128 = unsigned __int128;

enum class Direction { Maximize, Minimize };

inline const char* to_string(Direction d) noexcept { return d == Direction::Maximize ? "maximize" : "minimize"; }

class PlannerError : public Error {
public:
    using Error::Error;
};

//---------------------------------------------------------------------------//
// SplitMix64
//---------------------------------------------------------------------------//

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state = 0) noexcept : state_(state) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// floor(n * (next() >> 11) / 2^53), exact in 128-bit arithmetic.
inline std::uint64_t rng_index(SplitMix64& rng, std::uint64_t n) {
    if (n == 0) throw PlannerError("InvalidArgument", "rng_index needs n > 0");
    uint128 prod = static_cast<uint128>(n) * (rng.next() >> 11);
    return static_cast<std::uint64_t>(prod >> 53);
}

//---------------------------------------------------------------------------//
// Grid geometry
//---------------------------------------------------------------------------//

/// Number of grid values along one dimension. Numeric dimensions use
/// grid_steps (integers default to one value per integer); enums use their
/// choices and booleans {false, true}.
inline std::uint64_t grid_steps_of(const ParameterSpec& s) {
    switch (s.kind) {
    case ParamKind::Real: return s.grid_steps ? static_cast<std::uint64_t>(*s.grid_steps) : 1;
    case ParamKind::Integer:
        if (s.grid_steps) return static_cast<std::uint64_t>(*s.grid_steps);
        if (s.min && s.max) return static_cast<std::uint64_t>(*s.max - *s.min) + 1;
        return 1;
    case ParamKind::Enum: return std::max<std::uint64_t>(s.choices.size(), 1);
    case ParamKind::Boolean: return 2;
    case ParamKind::Text:
    case ParamKind::List: return 1;
    }
    return 1;
}

/// Value at grid index `idx` (< grid_steps_of(s)). Numeric values are
/// min + idx*(max-min)/(steps-1), evaluated left to right; the last index is
/// pinned to max so rounding never leaves the bounds.
inline Value grid_value(const ParameterSpec& s, std::uint64_t idx) {
    std::uint64_t steps = grid_steps_of(s);
    switch (s.kind) {
    case ParamKind::Real: {
        double lo = s.min.value_or(0.0), hi = s.max.value_or(lo);
        if (steps <= 1 || idx == 0) return Value{lo};
        if (idx >= steps - 1) return Value{hi};
        double v = lo + static_cast<double>(idx) * (hi - lo) / static_cast<double>(steps - 1);
        return Value{std::clamp(v, lo, hi)};
    }
    case ParamKind::Integer: {
        auto lo = static_cast<std::int64_t>(s.min.value_or(0.0));
        auto hi = static_cast<std::int64_t>(s.max.value_or(static_cast<double>(lo)));
        if (steps <= 1 || idx == 0) return Value{lo};
        if (idx >= steps - 1) return Value{hi};
        auto span = static_cast<uint128>(hi - lo);
        auto off = static_cast<std::int64_t>(span * idx / (steps - 1));
        return Value{lo + off};
    }
    case ParamKind::Enum: return s.choices.empty() ? Value{} : Value{s.choices.at(idx)};
    case ParamKind::Boolean: return Value{idx != 0};
    case ParamKind::Text:
    case ParamKind::List: return s.default_value.value_or(Value{});
    }
    return Value{};
}

/// Nearest grid index of `v` along `s`.
inline std::uint64_t grid_index_of(const ParameterSpec& s, const Value& v) {
    std::uint64_t steps = grid_steps_of(s);
    switch (s.kind) {
    case ParamKind::Real:
    case ParamKind::Integer: {
        if (steps <= 1 || !v.is_number()) return 0;
        double lo = s.min.value_or(0.0), hi = s.max.value_or(lo);
        if (hi <= lo) return 0;
        double t = (v.as_number() - lo) / (hi - lo) * static_cast<double>(steps - 1);
        double r = std::clamp(std::round(t), 0.0, static_cast<double>(steps - 1));
        return static_cast<std::uint64_t>(r);
    }
    case ParamKind::Enum:
        for (std::uint64_t i = 0; i < s.choices.size(); ++i)
            if (v.is_text() && s.choices[i] == v.as_text()) return i;
        return 0;
    case ParamKind::Boolean: return v.is_bool() && v.as_bool() ? 1 : 0;
    case ParamKind::Text:
    case ParamKind::List: return 0;
    }
    return 0;
}

/// Product of per-dimension steps, saturating at UINT64_MAX.
inline std::uint64_t grid_size(const ParameterSpace& space) {
    std::uint64_t n = 1;
    for (const auto& d : space) {
        std::uint64_t s = grid_steps_of(d);
        if (s != 0 && n > std::numeric_limits<std::uint64_t>::max() / s) return std::numeric_limits<std::uint64_t>::max();
        n *= s;
    }
    return n;
}

/// Row-major decoding of a flat index: the last dimension varies fastest.
inline Value::Record grid_point(const ParameterSpace& space, std::uint64_t flat) {
    if (flat >= grid_size(space))
        throw PlannerError("IndexOutOfRange",
                           std::to_string(flat) + " >= grid size " + std::to_string(grid_size(space)));
    Value::Record out;
    for (auto it = space.rbegin(); it != space.rend(); ++it) {
        std::uint64_t steps = grid_steps_of(*it);
        out.emplace(it->name, grid_value(*it, flat % steps));
        flat /= steps;
    }
    return out;
}

struct GridCursor {
    std::uint64_t flat_index = 0;
};

/// Next grid point and advance, or nullopt once every point was proposed.
inline std::optional<Value::Record> grid_next(GridCursor& cursor, const ParameterSpace& space) {
    if (cursor.flat_index >= grid_size(space)) return std::nullopt;
    return grid_point(space, cursor.flat_index++);
}

//---------------------------------------------------------------------------//
// Random and epsilon-greedy
//---------------------------------------------------------------------------//

/// One rng_index(steps) draw per dimension, in declaration order.
inline Value::Record random_next(SplitMix64& rng, const ParameterSpace& space) {
    Value::Record out;
    for (const auto& d : space) out.emplace(d.name, grid_value(d, rng_index(rng, grid_steps_of(d))));
    return out;
}

/// A past experiment as the planners see it; `objective` is set iff DONE.
struct Observation {
    const Value::Record* params = nullptr;
    std::optional<double> objective;
};

/// Extremal DONE objective; ties resolve to the lowest index.
inline std::optional<std::size_t> best_so_far(std::span<const Observation> history, Direction dir) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (!history[i].objective) continue;
        if (!best) {
            best = i;
            continue;
        }
        double cur = *history[*best].objective, v = *history[i].objective;
        if (dir == Direction::Maximize ? v > cur : v < cur) best = i;
    }
    return best;
}

struct Proposal {
    Value::Record params;
    /// Set when no dimension can move, so an exploit step repeats the best point.
    bool degenerate = false;
};

inline constexpr std::uint64_t kEpsilonResolution = 1'000'000;

/// Explores with probability epsilon, otherwise steps the best-so-far point
/// one grid index along one randomly chosen dimension.
inline Proposal epsilon_greedy_next(SplitMix64& rng, const ParameterSpace& space, std::span<const Observation> history,
                                    Direction dir, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw PlannerError("InvalidArgument", "epsilon must lie in [0, 1]");
    auto best = best_so_far(history, dir);
    if (!best) return {random_next(rng, space), false};

    double u = static_cast<double>(rng_index(rng, kEpsilonResolution)) / static_cast<double>(kEpsilonResolution);
    if (u < epsilon) return {random_next(rng, space), false};

    const Value::Record& from = *history[*best].params;
    bool degenerate = std::all_of(space.begin(), space.end(), [](const auto& d) { return grid_steps_of(d) == 1; });
    if (space.empty()) return {from, true};

    const ParameterSpec& dim = space[rng_index(rng, space.size())];
    bool up = rng_index(rng, 2) == 1;
    auto last = static_cast<std::int64_t>(grid_steps_of(dim)) - 1;
    auto it = from.find(dim.name);
    auto idx = static_cast<std::int64_t>(grid_index_of(dim, it == from.end() ? Value{} : it->second));
    std::int64_t next = std::clamp<std::int64_t>(idx + (up ? 1 : -1), 0, last);
    if (next == idx) next = std::clamp<std::int64_t>(idx + (up ? -1 : 1), 0, last);

    Proposal p{from, degenerate};
    p.params[dim.name] = grid_value(dim, static_cast<std::uint64_t>(next));
    return p;
}

}  // namespace aeos
