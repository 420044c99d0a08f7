#pragma once

#include "aescope/core/clock.hpp"
#include "aescope/log/log.hpp"

#include <random>
#include <string>
#include <vector>

namespace fixtures {

using aescope::json;
using aescope::log::LogRecord;

inline json random_value(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> kind(0, depth > 2 ? 4 : 6);
    std::uniform_real_distribution<double> real(-1e6, 1e6);
    std::uniform_int_distribution<std::int64_t> integer(-1'000'000'000, 1'000'000'000);
    static const std::vector<std::string> words{"sinc", "chirp", "a \"quoted\" word", "tab\there", "µm", "line\nbreak",
                                                "", "ds-000001", "\\back"};
    switch (kind(rng)) {
    case 0: return real(rng);
    case 1: return integer(rng);
    case 2: return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
    case 3: return std::bernoulli_distribution(0.5)(rng);
    case 4: return nullptr;
    case 5: {
        json a = json::array();
        const int n = std::uniform_int_distribution<int>(0, 4)(rng);
        for (int i = 0; i < n; ++i) a.push_back(random_value(rng, depth + 1));
        return a;
    }
    default: {
        json o = json::object();
        const int n = std::uniform_int_distribution<int>(0, 4)(rng);
        for (int i = 0; i < n; ++i) o["k" + std::to_string(rng() % 50)] = random_value(rng, depth + 1);
        return o;
    }
    }
}

inline std::vector<LogRecord> random_records(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    static const std::vector<std::string> ops{"define_be_parms", "tip_control", "raster_scan", "apply_pulse",
                                              "do_beps_specific", "set_tip_bias"};
    std::vector<LogRecord> out;
    std::int64_t t = aescope::InstrumentClock::kDefaultStartMs;
    for (std::size_t i = 0; i < n; ++i) {
        LogRecord r;
        r.seq = static_cast<std::int64_t>(i + 1);
        t += static_cast<std::int64_t>(rng() % 100000);
        r.ts = aescope::format_iso8601_ms(t);
        r.op = ops[rng() % ops.size()];
        const int params = static_cast<int>(rng() % 6);
        for (int k = 0; k < params; ++k) r.params["p" + std::to_string(rng() % 20)] = random_value(rng, 0);
        r.status = rng() % 5 == 0 ? "error:out_of_window" : "ok";
        if (rng() % 3 == 0) r.dataset_ref = "ds-" + std::to_string(rng() % 1000);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace fixtures
