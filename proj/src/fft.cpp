#include "ww/fft.hpp"

#include <fftw3.h>

#include <cstdint>
#include <map>
#include <mutex>
#include <tuple>

namespace ww {
namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// FFTW planner is not thread-safe; plan creation is serialized and plans are
// reused via the new-array execute interface. fftw_malloc'd arrays share the
// alignment the plans were created with.
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    PlanPair get(const Grid& g, int howmany) {
        std::lock_guard<std::mutex> lock(mutex_);
        Key key{g.d, g.n, howmany};
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::size_t len = g.size() * static_cast<std::size_t>(howmany);
        fftw_complex* a = fftw_alloc_complex(len);
        fftw_complex* b = fftw_alloc_complex(len);
        int dims[2] = {g.n, g.n};
        int rank = g.d;
        int dist = static_cast<int>(g.size());
        PlanPair p;
        p.fwd = fftw_plan_many_dft(rank, dims, howmany, a, nullptr, 1, dist, b, nullptr, 1,
                                   dist, FFTW_FORWARD, FFTW_ESTIMATE);
        p.bwd = fftw_plan_many_dft(rank, dims, howmany, a, nullptr, 1, dist, b, nullptr, 1,
                                   dist, FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_free(a);
        fftw_free(b);
        plans_[key] = p;
        return p;
    }

  private:
    using Key = std::tuple<int, int, int>;
    std::mutex mutex_;
    std::map<Key, PlanPair> plans_;
};

struct Scratch {
    fftw_complex* data = nullptr;
    std::size_t len = 0;
    ~Scratch() {
        if (data) fftw_free(data);
    }
    fftw_complex* ensure(std::size_t n) {
        if (n > len) {
            if (data) fftw_free(data);
            data = fftw_alloc_complex(n);
            len = n;
        }
        return data;
    }
};

bool aligned16(const void* p) { return (reinterpret_cast<std::uintptr_t>(p) & 0xf) == 0; }

void execute(const Grid& g, const Complex* in, Complex* out, int howmany, bool forward) {
    PlanPair plans = PlanCache::instance().get(g, howmany);
    std::size_t len = g.size() * static_cast<std::size_t>(howmany);
    fftw_plan plan = forward ? plans.fwd : plans.bwd;
    double scale = forward ? 1.0 / static_cast<double>(g.size()) : 1.0;

    // out-of-place c2c preserves its input, so user buffers can be used
    // directly when they have the alignment the plans were created with
    if (aligned16(in) && aligned16(out) && in != out) {
        fftw_execute_dft(plan,
                         reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
        if (forward)
            for (std::size_t i = 0; i < len; ++i) out[i] *= scale;
        return;
    }

    thread_local Scratch s_in, s_out;
    fftw_complex* a = s_in.ensure(len);
    fftw_complex* b = s_out.ensure(len);
    for (std::size_t i = 0; i < len; ++i) {
        a[i][0] = in[i].real();
        a[i][1] = in[i].imag();
    }
    fftw_execute_dft(plan, a, b);
    for (std::size_t i = 0; i < len; ++i) out[i] = Complex(b[i][0] * scale, b[i][1] * scale);
}

}  // namespace

namespace fft {

void forward(const Grid& g, const Complex* in, Complex* out, int howmany) {
    execute(g, in, out, howmany, true);
}

void inverse(const Grid& g, const Complex* in, Complex* out, int howmany) {
    execute(g, in, out, howmany, false);
}

}  // namespace fft

Spectrum analyze(const RealField& u) {
    Spectrum s(u.grid);
    std::vector<Complex> in(u.size());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = Complex(u.values[i], 0.0);
    fft::forward(u.grid, in.data(), s.coeffs.data());
    return s;
}

RealField synthesize(const Spectrum& s) {
    RealField u(s.grid);
    std::vector<Complex> out(s.coeffs.size());
    fft::inverse(s.grid, s.coeffs.data(), out.data());
    for (std::size_t i = 0; i < out.size(); ++i) u.values[i] = out[i].real();
    return u;
}

}  // namespace ww
