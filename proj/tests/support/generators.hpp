// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// Hand-rolled random generators for property tests. Every generator takes
// the engine explicitly so a failing case can be reproduced from its seed.

#pragma once

#include <cmath>
#include <random>
#include <string>

#include "aeos/protocol.hpp"
#include "aeos/value.hpp"

namespace aeos::gen {

using Rng = std::mt19937_64;

inline int uniform(Rng& r, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(r); }

inline std::string identifier(Rng& r) {
    static constexpr char kFirst[] = "abcdefghijklmnopqrstuvwxyz";
    static constexpr char kRest[] = "abcdefghijklmnopqrstuvwxyz0123456789_";
    std::string s(1, kFirst[uniform(r, 0, 25)]);
    int n = uniform(r, 0, 10);
    for (int i = 0; i < n; ++i) s += kRest[uniform(r, 0, 36)];
    return s;
}

/// Valid UTF-8 including escapes, multi-octet sequences and controls.
inline std::string text(Rng& r) {
    static const char* kPieces[] = {"a", "Z", "0", " ", "\"", "\\", "/", "\n", "\t", "\x01", "\x1f",
                                    "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x94\xac", "$bytes", "{", "]"};
    std::string s;
    int n = uniform(r, 0, 12);
    for (int i = 0; i < n; ++i) s += kPieces[uniform(r, 0, std::size(kPieces) - 1)];
    return s;
}

inline double real(Rng& r) {
    switch (uniform(r, 0, 5)) {
    case 0: return 0.0;
    case 1: return -0.0;
    case 2: return static_cast<double>(uniform(r, -1000, 1000));
    case 3: return std::ldexp(std::uniform_real_distribution<double>(-1, 1)(r), uniform(r, -1070, 1020));
    case 4: return 5e-324;
    default: return std::uniform_real_distribution<double>(-1e6, 1e6)(r);
    }
}

inline std::int64_t integer(Rng& r) {
    switch (uniform(r, 0, 3)) {
    case 0: return uniform(r, -10, 10);
    case 1: return std::numeric_limits<std::int64_t>::min();
    case 2: return std::numeric_limits<std::int64_t>::max();
    default: return static_cast<std::int64_t>(r());
    }
}

/// Random value with container nesting at most `depth`.
inline Value value(Rng& r, int depth) {
    int top = depth > 0 ? 7 : 5;
    switch (uniform(r, 0, top)) {
    case 0: return Value{};
    case 1: return Value{uniform(r, 0, 1) == 1};
    case 2: return Value{integer(r)};
    case 3: return Value{real(r)};
    case 4: return Value{text(r)};
    case 5: {
        Bytes b;
        int n = uniform(r, 0, 9);
        for (int i = 0; i < n; ++i) b.data.push_back(static_cast<std::uint8_t>(uniform(r, 0, 255)));
        return Value{b};
    }
    case 6: {
        Value::List l;
        int n = uniform(r, 0, 4);
        for (int i = 0; i < n; ++i) l.push_back(value(r, depth - 1));
        return Value{l};
    }
    default: {
        Value::Record rec;
        int n = uniform(r, 0, 4);
        for (int i = 0; i < n; ++i) {
            std::string k = text(r);
            if (k == kBytesKey) k += "x";
            rec.emplace(k, value(r, depth - 1));
        }
        return Value{rec};
    }
    }
}

/// Record with nesting at most `depth` (the record itself counts as 1).
inline Value::Record record(Rng& r, int depth) {
    Value::Record rec;
    int n = uniform(r, 0, 4);
    for (int i = 0; i < n; ++i) rec.emplace(identifier(r), value(r, depth - 1));
    return rec;
}

/// Valid message of any type; payload records nest at most four deep in total.
inline Message message(Rng& r) {
    switch (uniform(r, 0, 7)) {
    case 0: return RegisterMsg{Value{record(r, 3)}};
    case 1: {
        RegisterAckMsg m{identifier(r), uniform(r, 0, 1) == 1, {}};
        if (!m.ok)
            m.violations.push_back(Value::Record{{"code", "EmptyName"}, {"path", "module_name"}, {"detail", text(r)}});
        return m;
    }
    case 2: return HeartbeatMsg{identifier(r), uniform(r, 0, 1) ? "READY" : "BUSY"};
    case 3: return HeartbeatAckMsg{};
    case 4: return ExecuteRequestMsg{integer(r), identifier(r), record(r, 3)};
    case 5: return ExecuteResultMsg{integer(r), record(r, 3), uniform(r, 0, 100000)};
    case 6: return ExecuteErrorMsg{integer(r), identifier(r), text(r)};
    default: return ShutdownMsg{text(r)};
    }
}

/// Applies 1 to 4 random edits (flip, insert, delete, truncate) to `in`.
inline Octets mutate(Rng& r, Octets in) {
    int edits = uniform(r, 1, 4);
    for (int e = 0; e < edits; ++e) {
        switch (uniform(r, 0, 3)) {
        case 0:
            if (!in.empty()) in[uniform(r, 0, static_cast<int>(in.size()) - 1)] ^= static_cast<std::uint8_t>(1u << uniform(r, 0, 7));
            break;
        case 1:
            in.insert(in.begin() + uniform(r, 0, static_cast<int>(in.size())), static_cast<std::uint8_t>(uniform(r, 0, 255)));
            break;
        case 2:
            if (!in.empty()) in.erase(in.begin() + uniform(r, 0, static_cast<int>(in.size()) - 1));
            break;
        default:
            in.resize(static_cast<std::size_t>(uniform(r, 0, static_cast<int>(in.size()))));
            break;
        }
    }
    return in;
}

}  // namespace aeos::gen
