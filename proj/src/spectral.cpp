#include "tdseg/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <new>
#include <numbers>
#include <stdexcept>

namespace tdseg {

namespace {

// The FFTW planner is not reentrant; plan creation/destruction is serialized.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

double frequency(int k, int n, double extent) {
    const int signed_k = (k <= n / 2) ? k : k - n;
    return 2.0 * std::numbers::pi * signed_k / extent;
}

// fftw_malloc-backed buffer so every execution array shares the SIMD
// alignment of the arrays the plans were created on.
template <typename T>
struct AlignedBuffer {
    T* data = nullptr;
    explicit AlignedBuffer(std::size_t count) {
        if (count == 0) return;
        data = static_cast<T*>(fftw_malloc(sizeof(T) * count));
        if (!data) throw std::bad_alloc();
    }
    ~AlignedBuffer() { fftw_free(data); }
    AlignedBuffer(const AlignedBuffer&) = delete;
    AlignedBuffer& operator=(const AlignedBuffer&) = delete;
};

// Execution scratch is reused per thread: concurrent calls stay independent
// without paying a multi-megabyte allocation (and its page faults) per call.
struct Scratch {
    AlignedBuffer<double> real{0};
    AlignedBuffer<fftw_complex> spec{0};
    std::size_t real_count = 0;
    std::size_t spec_count = 0;

    void ensure(std::size_t npix, std::size_t nspec) {
        if (real_count < npix) {
            fftw_free(real.data);
            real.data = static_cast<double*>(fftw_malloc(sizeof(double) * npix));
            if (!real.data) throw std::bad_alloc();
            real_count = npix;
        }
        if (spec_count < nspec) {
            fftw_free(spec.data);
            spec.data = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nspec));
            if (!spec.data) throw std::bad_alloc();
            spec_count = nspec;
        }
    }
};

Scratch& thread_scratch() {
    static thread_local Scratch scratch;
    return scratch;
}

} // namespace

KernelSpec::KernelSpec(const Grid& grid, double dt) : grid_(grid), dt_(dt) {
    if (!(dt > 0.0))
        throw std::invalid_argument("KernelSpec: dt must be positive");
    const int hw = half_width();
    half_spectrum_.resize(static_cast<std::size_t>(grid_.ny) * hw);
    for (int ky = 0; ky < grid_.ny; ++ky) {
        const double xi_y = frequency(ky, grid_.ny, grid_.ly);
        for (int kx = 0; kx < hw; ++kx) {
            const double xi_x = frequency(kx, grid_.nx, grid_.lx);
            half_spectrum_[static_cast<std::size_t>(ky) * hw + kx] =
                std::exp(-(xi_x * xi_x + xi_y * xi_y) * dt);
        }
    }
}

double KernelSpec::symbol(int kx, int ky) const {
    const double xi_x = 2.0 * std::numbers::pi * kx / grid_.lx;
    const double xi_y = 2.0 * std::numbers::pi * ky / grid_.ly;
    return std::exp(-(xi_x * xi_x + xi_y * xi_y) * dt_);
}

KernelSpec make_kernel(const Grid& grid, double dt) { return KernelSpec(grid, dt); }

struct ConvolutionPlan::Impl {
    KernelSpec kernel;
    std::vector<double> scaled_symbol; // symbol / N, folded into the inverse transform
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
    int planned_alignment = 0;

    explicit Impl(KernelSpec k) : kernel(std::move(k)) {
        const Grid& g = kernel.grid();
        const int hw = kernel.half_width();
        const double inv_n = 1.0 / static_cast<double>(g.npixels());
        scaled_symbol.resize(kernel.half_spectrum().size());
        for (std::size_t i = 0; i < scaled_symbol.size(); ++i)
            scaled_symbol[i] = kernel.half_spectrum()[i] * inv_n;

        // Plans are created once on throwaway fftw_malloc'd buffers; execution
        // later passes new arrays of the same alignment class, which the
        // new-array execute interface requires.
        AlignedBuffer<double> real(static_cast<std::size_t>(g.npixels()));
        AlignedBuffer<fftw_complex> spec(static_cast<std::size_t>(g.ny) * hw);
        planned_alignment = fftw_alignment_of(real.data);
        std::lock_guard<std::mutex> lock(planner_mutex());
        forward = fftw_plan_dft_r2c_2d(g.ny, g.nx, real.data, spec.data, FFTW_ESTIMATE);
        inverse = fftw_plan_dft_c2r_2d(g.ny, g.nx, spec.data, real.data, FFTW_ESTIMATE);
        if (!forward || !inverse)
            throw std::runtime_error("ConvolutionPlan: FFTW planning failed");
    }

    bool alignment_matches(double* p) const { return fftw_alignment_of(p) == planned_alignment; }

    ~Impl() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (inverse) fftw_destroy_plan(inverse);
    }
};

ConvolutionPlan::ConvolutionPlan(KernelSpec kernel)
    : impl_(std::make_unique<Impl>(std::move(kernel))) {}

ConvolutionPlan::~ConvolutionPlan() = default;
ConvolutionPlan::ConvolutionPlan(ConvolutionPlan&&) noexcept = default;
ConvolutionPlan& ConvolutionPlan::operator=(ConvolutionPlan&&) noexcept = default;

const KernelSpec& ConvolutionPlan::kernel() const { return impl_->kernel; }
const Grid& ConvolutionPlan::grid() const { return impl_->kernel.grid(); }

ScalarField ConvolutionPlan::operator()(const ScalarField& u) const {
    const Grid& g = grid();
    if (u.grid() != g)
        throw std::invalid_argument("convolve: field grid does not match plan grid");

    const std::size_t npix = u.size();
    const std::size_t nspec = impl_->scaled_symbol.size();
    Scratch& scratch = thread_scratch();
    scratch.ensure(npix, nspec);
    fftw_complex* spec = scratch.spec.data;

    // The out-of-place r2c transform leaves its input untouched, so the
    // caller's buffer can feed the transform directly when its alignment
    // class matches the plan's; likewise the inverse can write straight into
    // the result. The scratch path covers odd alignments.
    double* in = const_cast<double*>(u.data());
    if (!impl_->alignment_matches(in)) {
        std::copy_n(u.data(), npix, scratch.real.data);
        in = scratch.real.data;
    }
    fftw_execute_dft_r2c(impl_->forward, in, spec);
    for (std::size_t i = 0; i < nspec; ++i) {
        spec[i][0] *= impl_->scaled_symbol[i];
        spec[i][1] *= impl_->scaled_symbol[i];
    }

    std::vector<double> result(npix);
    if (impl_->alignment_matches(result.data())) {
        fftw_execute_dft_c2r(impl_->inverse, spec, result.data());
    } else {
        fftw_execute_dft_c2r(impl_->inverse, spec, scratch.real.data);
        std::copy_n(scratch.real.data, npix, result.data());
    }
    return ScalarField(g, std::move(result));
}

ScalarField convolve(const ConvolutionPlan& plan, const ScalarField& u) { return plan(u); }

ScalarField convolve_direct(const Grid& grid, double dt, const ScalarField& u) {
    if (!(dt > 0.0))
        throw std::invalid_argument("convolve_direct: dt must be positive");
    if (u.grid() != grid)
        throw std::invalid_argument("convolve_direct: field grid mismatch");
    if (grid.npixels() > 4096)
        throw std::invalid_argument("convolve_direct: grid too large (limit 4096 pixels)");

    const int nx = grid.nx, ny = grid.ny;
    const double hx = grid.hx(), hy = grid.hy();

    // Periodized Gaussian sampled at grid offsets. The image count covers
    // exp(-s^2/(4*dt)) down to ~1e-300.
    const int mx = std::max(2, static_cast<int>(std::ceil(std::sqrt(2800.0 * dt) / grid.lx)) + 1);
    const int my = std::max(2, static_cast<int>(std::ceil(std::sqrt(2800.0 * dt) / grid.ly)) + 1);
    std::vector<double> kernel(static_cast<std::size_t>(nx) * ny, 0.0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double sum = 0.0;
            for (int q = -my; q <= my; ++q) {
                const double y = j * hy + q * grid.ly;
                for (int p = -mx; p <= mx; ++p) {
                    const double x = i * hx + p * grid.lx;
                    sum += std::exp(-(x * x + y * y) / (4.0 * dt));
                }
            }
            kernel[static_cast<std::size_t>(j) * nx + i] = sum;
        }
    }
    // Re-normalize so the discrete operator preserves the mean exactly:
    // cell_area * sum(kernel) == 1, i.e. its transform has symbol(0) = 1.
    double mass = 0.0;
    for (double k : kernel) mass += k;
    const double scale = 1.0 / (mass * grid.cell_area());
    for (double& k : kernel) k *= scale;

    ScalarField out(grid, 0.0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double acc = 0.0;
            for (int q = 0; q < ny; ++q) {
                const int dy = (j - q + ny) % ny;
                const double* krow = kernel.data() + static_cast<std::size_t>(dy) * nx;
                const double* urow = u.data() + static_cast<std::size_t>(q) * nx;
                for (int p = 0; p < nx; ++p) {
                    const int dx = (i - p + nx) % nx;
                    acc += krow[dx] * urow[p];
                }
            }
            out.at(i, j) = acc * grid.cell_area();
        }
    }
    return out;
}

} // namespace tdseg
