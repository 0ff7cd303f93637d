// A small tunable program for harness demos and tests: two iterative
// refinement phases whose iteration counts are the knobs. More iterations
// bring the state closer to an input-derived target, so DISTANCE falls as
// the knobs rise and COST (wall time) grows.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>

namespace {

constexpr int kDim = 16;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double unit(std::uint64_t& state) {
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    return static_cast<double>((state * 2685821657736338717ull) >> 11) * 0x1.0p-53;
}

} // namespace

int main(int argc, char** argv) {
    std::string input;
    long iter1 = -1, iter2 = -1, sleep_ms = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        const auto value = [&arg](const char* name) -> const char* {
            const std::size_t n = std::strlen(name);
            if (arg.compare(0, n, name) == 0 && arg.size() > n && arg[n] == '=')
                return arg.c_str() + n + 1;
            return nullptr;
        };
        if (const char* v = value("--input"))
            input = v;
        else if (const char* v = value("--iter1"))
            iter1 = std::strtol(v, nullptr, 10);
        else if (const char* v = value("--iter2"))
            iter2 = std::strtol(v, nullptr, 10);
        else if (const char* v = value("--sleep-ms"))
            sleep_ms = std::strtol(v, nullptr, 10);
        else {
            std::fprintf(stderr, "usage: toybench --input=ID --iter1=N --iter2=N [--sleep-ms=T]\n");
            return 2;
        }
    }
    if (input.empty() || iter1 < 0 || iter2 < 0) {
        std::fprintf(stderr, "usage: toybench --input=ID --iter1=N --iter2=N [--sleep-ms=T]\n");
        return 2;
    }

    const auto start = std::chrono::steady_clock::now();
    if (sleep_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));

    std::uint64_t state = fnv1a(input) | 1;
    double target[kDim];
    double x[kDim] = {};
    for (double& t : target)
        t = unit(state) * 10.0 - 5.0;

    for (long it = 0; it < iter1; ++it)
        for (int d = 0; d < kDim / 2; ++d)
            x[d] += (target[d] - x[d]) * 0.35;
    for (long it = 0; it < iter2; ++it)
        for (int d = 0; d < kDim; ++d)
            x[d] += (target[d] - x[d]) * 0.2;

    double dist = 0.0;
    for (int d = 0; d < kDim; ++d)
        dist += (target[d] - x[d]) * (target[d] - x[d]);
    dist = std::sqrt(dist);

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() + 1e-6;

    std::printf("DISTANCE %.17g\n", dist);
    std::printf("COST %.17g\n", elapsed);
    return 0;
}
