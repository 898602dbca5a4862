#include "asipsim/workloads.hpp"

#include <cmath>
#include <random>

#include "asipsim/cnn.hpp"
#include "asipsim/kernels.hpp"
#include "asipsim/qam.hpp"

namespace asip::workloads {

uint64_t inversions_per_second(const GridConfig& g, const CoherenceBlock& c) {
    uint64_t block = static_cast<uint64_t>(c.n_b) * c.n_t;
    if (block == 0) return 0;
    return resource_elements_per_second(g) / block;
}

ThroughputReport throughput_report(const CoherenceBlock& c, uint32_t users,
                                   uint64_t cycles_to_detect, double clock_hz,
                                   std::optional<double> power_w, std::optional<double> area_mm2) {
    ThroughputReport r;
    double bits = static_cast<double>(c.n_b) * c.n_t * users * qam64::kBitsPerSymbol;
    double seconds = static_cast<double>(cycles_to_detect) / clock_hz;
    r.gbps = bits / seconds / 1e9;
    if (area_mm2 && *area_mm2 > 0) r.area_eff_gbps_per_mm2 = r.gbps / *area_mm2;
    if (power_w && r.gbps > 0) r.energy_eff_pj_per_bit = *power_w / (r.gbps * 1e9) * 1e12;
    return r;
}

CVec random_channel(uint32_t m, uint32_t k, uint64_t seed) {
    // Box-Muller over a seeded engine; components N(0, 1/2) so entries are
    // unit-variance complex Gaussians
    std::mt19937_64 rng(seed);
    auto uniform = [&] {
        return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
    };
    CVec h(static_cast<size_t>(m) * k);
    for (auto& v : h) {
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-std::log(u1)); // sqrt(2 * (1/2) * -log u1)
        double phi = 2.0 * M_PI * u2;
        v = {r * std::cos(phi), r * std::sin(phi)};
    }
    return h;
}

namespace {

CBf16 to_bf16(std::complex<double> z) {
    return CBf16::from_f64_rne(z.real(), z.imag());
}

std::complex<double> to_host(CBf16 z) { return {z.re.to_f64(), z.im.to_f64()}; }

void store_host_matrix(ParallelVectorMemory& mem, const MatrixHandle& h, const CVec& a) {
    for (uint32_t r = 0; r < h.rows; ++r)
        for (uint32_t c = 0; c < h.cols; ++c)
            mem.set_element(h, r, c, to_bf16(a[static_cast<size_t>(r) * h.cols + c]));
}

CVec read_matrix(const ParallelVectorMemory& mem, const MatrixHandle& h) {
    CVec out(static_cast<size_t>(h.rows) * h.cols);
    for (uint32_t r = 0; r < h.rows; ++r)
        for (uint32_t c = 0; c < h.cols; ++c)
            out[static_cast<size_t>(r) * h.cols + c] = to_host(mem.element(h, r, c));
    return out;
}

// maps a fault pc to the cholesky column whose pivot failed
uint32_t singular_column_of(const Program& p, int32_t fault_pc) {
    uint32_t column = 0;
    for (int32_t i = 0; i < fault_pc && i < static_cast<int32_t>(p.instructions.size()); ++i)
        if (p.instructions[i].op == Opcode::inv_sqrt) ++column;
    return column;
}

} // namespace

ZfRun run_zf_coherence_block(uint32_t m_antennas, uint32_t n_b, uint32_t n_t, uint64_t seed,
                             const CostModel& cost) {
    const uint32_t K = 16;
    const uint32_t mb = m_antennas / 16;
    if (m_antennas == 0 || m_antennas % 16 != 0)
        throw std::invalid_argument("antenna count must be a positive multiple of 16");
    uint64_t symbols = static_cast<uint64_t>(n_b) * n_t;
    if (symbols % 16 != 0) throw std::invalid_argument("n_b*n_t must be a multiple of 16");
    uint32_t batches = static_cast<uint32_t>(symbols / 16);

    // memory: H^H, G, L, invd, R batches, Yhat batches
    uint32_t need = m_antennas + 16 + 16 + 1 + batches * (m_antennas + 16) + 64;
    ParallelVectorMemory mem(std::max(ParallelVectorMemory::kDefaultWords, need));
    SystolicUnit sys;
    Machine machine(mem, sys);
    machine.cost = cost;

    // channel, quantized once; the bf16 image is the channel the pipeline sees
    CVec h_raw = random_channel(m_antennas, K, seed);
    CVec h(h_raw.size());
    for (size_t i = 0; i < h_raw.size(); ++i) h[i] = to_host(to_bf16(h_raw[i]));

    auto hh = mem.register_matrix(K, m_antennas); // H^H = gramian operand, becomes W
    for (uint32_t r = 0; r < m_antennas; ++r)
        for (uint32_t c = 0; c < K; ++c)
            mem.set_element(hh, c, r, to_bf16(std::conj(h[static_cast<size_t>(r) * K + c])));

    VAddr g_base = mem.allocator_mark();
    mem.register_matrix_at(g_base, 16, 16);
    auto l_handle = mem.register_matrix(16, 16);
    VAddr invd = mem.allocator_mark();
    mem.reset_allocator(invd + 1);

    // transmitted symbols and noiseless receive vectors, batched 16 wide
    std::mt19937_64 sym_rng(seed ^ 0x5D3A9E4B1C6F27ULL);
    std::vector<uint8_t> tx(symbols * K);
    for (auto& b : tx) b = static_cast<uint8_t>(sym_rng() & 63);

    std::vector<MatrixHandle> r_handles;
    VAddr r0 = mem.allocator_mark();
    for (uint32_t b = 0; b < batches; ++b) {
        auto rb = mem.register_matrix(m_antennas, 16);
        r_handles.push_back(rb);
        for (uint32_t s = 0; s < 16; ++s) {
            uint64_t sym = static_cast<uint64_t>(b) * 16 + s;
            for (uint32_t ant = 0; ant < m_antennas; ++ant) {
                std::complex<double> acc = 0;
                for (uint32_t u = 0; u < K; ++u)
                    acc += h[static_cast<size_t>(ant) * K + u] * qam64::point(tx[sym * K + u]);
                mem.set_element(rb, ant, s, to_bf16(acc));
            }
        }
    }
    VAddr y0 = mem.allocator_mark();

    kernels::ZfLayout lay;
    lay.hh = hh;
    lay.g = g_base;
    lay.chol = {*mem.handle_at(g_base), l_handle, invd};
    lay.r0 = r0;
    lay.y0 = y0;
    lay.m_blocks = mb;
    lay.batches = batches;

    Program prog = assemble(kernels::zf_program(lay));
    machine.load_program(prog);

    ZfRun run;
    run.report = machine.run(100'000'000);
    if (run.report.status == RunStatus::fault) {
        if (machine.domain_error) {
            run.singular = true;
            run.singular_column = singular_column_of(prog, run.report.fault_pc);
        }
        return run;
    }

    // host-side checks in binary64
    run.w_det = read_matrix(mem, hh);
    run.max_identity_err = 0;
    for (uint32_t i = 0; i < K; ++i) {
        for (uint32_t j = 0; j < K; ++j) {
            std::complex<double> acc = 0;
            for (uint32_t a = 0; a < m_antennas; ++a)
                acc += run.w_det[static_cast<size_t>(i) * m_antennas + a] *
                       h[static_cast<size_t>(a) * K + j];
            if (i == j) acc -= 1.0;
            run.max_identity_err = std::max(run.max_identity_err, std::abs(acc));
        }
    }

    run.symbols = symbols * K;
    for (uint32_t b = 0; b < batches; ++b) {
        auto yb = mem.handle_at(y0 + b * 16);
        if (!yb) continue;
        for (uint32_t s = 0; s < 16; ++s) {
            uint64_t sym = static_cast<uint64_t>(b) * 16 + s;
            for (uint32_t u = 0; u < K; ++u) {
                unsigned got = qam64::demodulate(to_host(mem.element(*yb, u, s)));
                if (got != tx[sym * K + u]) ++run.symbol_errors;
            }
        }
    }
    return run;
}

CholeskyRun run_cholesky16(const CVec& g, const CostModel& cost) {
    if (g.size() != 256) throw std::invalid_argument("cholesky16 expects a 16x16 matrix");
    ParallelVectorMemory mem;
    SystolicUnit sys;
    Machine machine(mem, sys);
    machine.cost = cost;

    auto w = mem.register_matrix(16, 16);
    auto l = mem.register_matrix(16, 16);
    VAddr invd = mem.allocator_mark();
    mem.reset_allocator(invd + 1);
    store_host_matrix(mem, w, g);

    Program prog = assemble(kernels::prologue() + kernels::cholesky16({w, l, invd}) + "    halt\n");
    machine.load_program(prog);

    CholeskyRun run;
    run.report = machine.run(10'000'000);
    if (run.report.status == RunStatus::fault) {
        if (machine.domain_error) {
            run.singular = true;
            run.singular_column = singular_column_of(prog, run.report.fault_pc);
        }
        return run;
    }
    run.l = read_matrix(mem, l);
    run.invd.resize(16);
    VectorWord iw = mem.read(invd);
    for (unsigned i = 0; i < 16; ++i) run.invd[i] = to_host(iw[i]);
    return run;
}

DetectRun run_detect(const CVec& w_det, uint32_t m_antennas, const CVec& r,
                     const CostModel& cost) {
    const uint32_t K = 16;
    if (w_det.size() != static_cast<size_t>(K) * m_antennas || r.size() != m_antennas)
        throw std::invalid_argument("detect dimensions mismatch");
    ParallelVectorMemory mem;
    SystolicUnit sys;
    Machine machine(mem, sys);
    machine.cost = cost;

    auto w = mem.register_matrix(K, m_antennas);
    store_host_matrix(mem, w, w_det);
    VAddr r_addr = mem.allocator_mark();
    for (uint32_t ant = 0; ant < m_antennas; ++ant) {
        VectorWord& word = mem.word(r_addr + ant / 16);
        word[ant % 16] = to_bf16(r[ant]);
    }
    VAddr y_addr = r_addr + m_antennas / 16;

    // y = sum_k W[:,k] * r[k], one broadcast MAC per antenna
    std::ostringstream prog;
    prog << kernels::prologue();
    prog << "    addv v0, vzero, v15\n";
    prog << "    li x1, " << w.base << "\n";
    prog << "    mvva va1, x1\n";
    prog << "    li x2, " << r_addr << "\n";
    prog << "    mvva va0, x2\n";
    for (uint32_t chunk = 0; chunk < m_antennas / 16; ++chunk) {
        prog << "    ldv v1, (va0++)\n";
        prog << "    ldv v2, (va1++) [mode1]\n";
        for (unsigned k = 0; k < 16; ++k) {
            const char* cur = (k % 2 == 0) ? "v2" : "v3";
            const char* next = (k % 2 == 0) ? "v3" : "v2";
            if (k < 15) prog << "    ldv " << next << ", (va1++) [mode1]\n";
            prog << "    vmac v0, " << cur << ", v1[x" << (16 + k) << "]\n";
        }
    }
    prog << "    li x3, " << y_addr << "\n";
    prog << "    mvva va2, x3\n";
    prog << "    stv v0, (va2)\n";
    prog << "    halt\n";

    machine.load_program(assemble(prog.str()));
    DetectRun run;
    run.report = machine.run(10'000'000);
    if (run.report.status != RunStatus::halted) return run;
    VectorWord y = mem.read(y_addr);
    run.y_hat.resize(K);
    run.bits.resize(K);
    for (uint32_t u = 0; u < K; ++u) {
        run.y_hat[u] = to_host(y[u]);
        run.bits[u] = static_cast<uint8_t>(qam64::demodulate(run.y_hat[u]));
    }
    return run;
}

void store_dft_matrix(ParallelVectorMemory& mem, const MatrixHandle& h, bool conjugated) {
    if (h.rows != h.cols) throw std::invalid_argument("DFT matrix must be square");
    const double n = static_cast<double>(h.rows);
    for (uint32_t k = 0; k < h.rows; ++k) {
        for (uint32_t j = 0; j < h.cols; ++j) {
            double phase = -2.0 * M_PI * static_cast<double>(k) * j / n;
            if (conjugated) phase = -phase;
            mem.set_element(h, k, j, to_bf16({std::cos(phase), std::sin(phase)}));
        }
    }
}

Fft2dRun run_fft2d(uint32_t n, uint32_t m, const CVec& a, const CostModel& cost) {
    if (a.size() != static_cast<size_t>(n) * m)
        throw std::invalid_argument("fft2d input dimensions mismatch");
    uint32_t need = n * n / 16 + 2 * (n * m / 16) + m * m / 16 + n * m / 16 + 64;
    ParallelVectorMemory mem(std::max(ParallelVectorMemory::kDefaultWords, need));
    SystolicUnit sys;
    Machine machine(mem, sys);
    machine.cost = cost;

    kernels::Fft2dLayout lay;
    lay.wn = mem.register_matrix(n, n);
    store_dft_matrix(mem, lay.wn, false);
    lay.a = mem.register_matrix(n, m);
    store_host_matrix(mem, lay.a, a);
    lay.wm_conj = mem.register_matrix(m, m);
    store_dft_matrix(mem, lay.wm_conj, true);
    lay.t = mem.allocator_mark();
    lay.f = lay.t + n * m / 16;

    machine.load_program(assemble(kernels::fft2d_program(lay)));
    Fft2dRun run;
    run.report = machine.run(100'000'000);
    if (run.report.status != RunStatus::halted) return run;
    run.f = read_matrix(mem, *mem.handle_at(lay.f));
    return run;
}

PositioningRun run_positioning(uint64_t seed, double clock_hz) {
    const uint32_t N = 64, M = 128;
    // channel snapshot -> 2-D FFT on the systolic array
    CVec snapshot = random_channel(N, M, seed);
    Fft2dRun fft = run_fft2d(N, M, snapshot);

    PositioningRun run;
    run.fft_cycles = fft.report.cycles;
    if (fft.report.status != RunStatus::halted) return run;

    // stage the angular-delay image into the CNN memory as two Q15 planes
    ParallelVectorMemory mem(2048);
    auto fh = mem.register_matrix(N, M);
    store_host_matrix(mem, fh, fft.f);
    NetworkConfig cfg;
    CnnMemory cnn_mem(words_for_network(cfg) + 2 * fh.words());
    CnnAddr plane_re = cnn_mem.allocate_words(fh.words());
    CnnAddr plane_im = cnn_mem.allocate_words(fh.words());
    // scale the FFT image into [-1, 1); the transform magnifies by about
    // sqrt(N*M) on CN(0,1) input
    double peak = 0;
    for (auto& z : fft.f) peak = std::max(peak, std::max(std::abs(z.real()), std::abs(z.imag())));
    float scale = peak > 0 ? static_cast<float>(0.99 / peak) : 1.0f;
    auto dma = dma_copy_split(mem, fh, cnn_mem, plane_re, plane_im, scale);
    if (!dma.ok) return run;
    run.dma_cycles = dma.cycles;

    // the two planes feed the network as its two input channels; plane
    // storage is already (channel, row, column) major
    Tensor input{N, M, 2, plane_re};

    CnnEngine eng(cnn_mem);
    auto weights = random_weights(cfg, seed ^ 0xCAFEF00DULL);
    auto net = stage_weights(cnn_mem, cfg, weights);
    auto res = eng.run_network(input, net);
    run.cnn_cycles = res.cycles;
    run.cnn_macs = res.macs;
    run.position.assign(res.position.begin(), res.position.end());
    run.total_cycles = run.fft_cycles + run.dma_cycles + run.cnn_cycles;
    run.rate_per_s = clock_hz / static_cast<double>(run.total_cycles);
    return run;
}

} // namespace asip::workloads
