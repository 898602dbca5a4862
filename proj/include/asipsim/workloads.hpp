#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "asipsim/machine.hpp"

namespace asip::workloads {

// ---- analytic resource-grid calculators ----

struct GridConfig {
    double subcarrier_spacing_hz = 0;
    double bandwidth_hz = 0;
    uint64_t subcarriers = 0;        // N
    uint64_t symbols_per_second = 0; // M
};

struct CoherenceBlock {
    uint32_t n_b = 16; // subcarriers per coherence bandwidth
    uint32_t n_t = 1;  // OFDM symbols per coherence time
};

inline uint64_t resource_elements_per_second(const GridConfig& g) {
    return g.subcarriers * g.symbols_per_second;
}

// channel inversions the grid demands per second: RE/s over the block size
uint64_t inversions_per_second(const GridConfig& g, const CoherenceBlock& c);

struct ThroughputReport {
    double gbps = 0;
    std::optional<double> area_eff_gbps_per_mm2;
    std::optional<double> energy_eff_pj_per_bit;
};

// coherence bandwidth x OFDM symbols x users x modulation bits over the
// calculation time; efficiency figures only when area/power are supplied
ThroughputReport throughput_report(const CoherenceBlock& c, uint32_t users,
                                   uint64_t cycles_to_detect, double clock_hz,
                                   std::optional<double> power_w = std::nullopt,
                                   std::optional<double> area_mm2 = std::nullopt);

// ---- channel + detection pipeline ----

using CVec = std::vector<std::complex<double>>;

// i.i.d. CN(0,1) entries, row-major m x k, reproducible for a given seed
CVec random_channel(uint32_t m, uint32_t k, uint64_t seed);

struct ZfRun {
    ExecutionReport report;
    bool singular = false;
    uint32_t singular_column = 0;
    double max_identity_err = 0; // ||W_det * H - I||_max in binary64
    uint64_t symbols = 0;
    uint64_t symbol_errors = 0;
    CVec w_det; // 16 x M, row-major, read back from the machine
};

// Full coherence-block detection: Gramian + Cholesky + substitution on the
// simulated machine, then one systolic job per 16 received vectors.
// Symbols are random 64-QAM, received noiselessly through the channel.
ZfRun run_zf_coherence_block(uint32_t m_antennas, uint32_t n_b, uint32_t n_t, uint64_t seed,
                             const CostModel& cost = {});

struct CholeskyRun {
    ExecutionReport report;
    bool singular = false;
    uint32_t singular_column = 0;
    CVec l;    // 16x16 row-major lower factor
    CVec invd; // 16 reciprocal diagonal entries
};

// Factor a host-provided hermitian 16x16 matrix on the simulated machine.
CholeskyRun run_cholesky16(const CVec& g, const CostModel& cost = {});

struct DetectRun {
    ExecutionReport report;
    CVec y_hat;                 // K estimated symbols
    std::vector<uint8_t> bits;  // 6 bits per user, one byte each
};

// Single received vector through the vector-core MAC kernel, then a hard
// Gray demap on the estimates.
DetectRun run_detect(const CVec& w_det, uint32_t m_antennas, const CVec& r,
                     const CostModel& cost = {});

// ---- 2-D FFT positioning front end ----

// W[k][n] = exp(-2*pi*i*k*n/n_points), rounded to bf16; conjugated variant
// for the right-hand multiplication.
void store_dft_matrix(ParallelVectorMemory& mem, const MatrixHandle& h, bool conjugated);

struct Fft2dRun {
    ExecutionReport report;
    CVec f; // N x M row-major result read back as binary64
};

// F = W_N * A * W_M^H via two systolic jobs on a fresh machine.
Fft2dRun run_fft2d(uint32_t n, uint32_t m, const CVec& a, const CostModel& cost = {});

// ---- full positioning pipeline (FFT + DMA split + CNN) ----

struct PositioningRun {
    uint64_t fft_cycles = 0;
    uint64_t dma_cycles = 0;
    uint64_t cnn_cycles = 0;
    uint64_t total_cycles = 0;
    uint64_t cnn_macs = 0;
    std::vector<int16_t> position;
    double rate_per_s = 0; // at the given clock
};

PositioningRun run_positioning(uint64_t seed, double clock_hz);

} // namespace asip::workloads
