#include "asipsim/cnn.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

namespace asip {

Q15 tensor_at(const CnnMemory& mem, const Tensor& t, uint32_t y, uint32_t x, uint32_t ch) {
    return mem.at(t.index(y, x, ch));
}

void tensor_set(CnnMemory& mem, const Tensor& t, uint32_t y, uint32_t x, uint32_t ch, Q15 v) {
    mem.set(t.index(y, x, ch), v);
}

uint64_t analytic_conv_macs(const NetworkConfig& cfg, uint32_t layer) {
    return static_cast<uint64_t>(cfg.input_h) * cfg.input_w * cfg.filters *
           cfg.layer_kernels(layer) * cfg.kernel * cfg.kernel;
}

uint64_t analytic_macs(const NetworkConfig& cfg) {
    uint64_t macs = 0;
    for (uint32_t l = 0; l < cfg.conv_layers; ++l) macs += analytic_conv_macs(cfg, l);
    macs += static_cast<uint64_t>(cfg.fc_out) * cfg.fc_in();
    return macs;
}

NetworkWeights random_weights(const NetworkConfig& cfg, uint64_t seed) {
    std::mt19937_64 rng(seed);
    // small-magnitude weights keep activations inside Q15 comfortably
    std::uniform_int_distribution<int> wdist(-1024, 1024);
    NetworkWeights nw;
    for (uint32_t l = 0; l < cfg.conv_layers; ++l) {
        ConvWeights cw;
        cw.filters = cfg.filters;
        cw.kernels = cfg.layer_kernels(l);
        cw.kh = cw.kw = cfg.kernel;
        cw.weights.resize(static_cast<size_t>(cw.filters) * cw.kernels * cw.kh * cw.kw);
        cw.bias.resize(cw.filters);
        for (auto& v : cw.weights) v = static_cast<Q15>(wdist(rng));
        for (auto& v : cw.bias) v = static_cast<Q15>(wdist(rng));
        nw.conv.push_back(std::move(cw));
    }
    nw.fc.out_dim = cfg.fc_out;
    nw.fc.in_dim = cfg.fc_in();
    nw.fc.weights.resize(nw.fc.out_dim * nw.fc.in_dim);
    nw.fc.bias.resize(nw.fc.out_dim);
    std::uniform_int_distribution<int> fdist(-64, 64);
    for (auto& v : nw.fc.weights) v = static_cast<Q15>(fdist(rng));
    for (auto& v : nw.fc.bias) v = static_cast<Q15>(wdist(rng));
    return nw;
}

namespace {

void put_u32(std::ostream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                 static_cast<char>(v >> 24)};
    out.write(b, 4);
}
uint32_t get_u32(std::istream& in) {
    unsigned char b[4] = {0, 0, 0, 0};
    in.read(reinterpret_cast<char*>(b), 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
void put_q15(std::ostream& out, Q15 v) {
    uint16_t u = static_cast<uint16_t>(v);
    char b[2] = {static_cast<char>(u), static_cast<char>(u >> 8)};
    out.write(b, 2);
}
Q15 get_q15(std::istream& in) {
    unsigned char b[2] = {0, 0};
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<Q15>(static_cast<uint16_t>(b[0] | (b[1] << 8)));
}

} // namespace

void save_weights(const NetworkWeights& w, std::ostream& out) {
    out.write("CNNW", 4);
    put_u32(out, static_cast<uint32_t>(w.conv.size()));
    for (const auto& c : w.conv) {
        put_u32(out, c.filters);
        put_u32(out, c.kernels);
        put_u32(out, c.kh);
        put_u32(out, c.kw);
    }
    put_u32(out, w.fc.out_dim);
    put_u32(out, static_cast<uint32_t>(w.fc.in_dim));
    for (const auto& c : w.conv) {
        for (Q15 v : c.weights) put_q15(out, v);
        for (Q15 v : c.bias) put_q15(out, v);
    }
    for (Q15 v : w.fc.weights) put_q15(out, v);
    for (Q15 v : w.fc.bias) put_q15(out, v);
    if (!out) throw CnnFault("short write while saving weights");
}

NetworkWeights load_weights(std::istream& in) {
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "CNNW") throw CnnFault("not a CNNW weight stream");
    NetworkWeights w;
    uint32_t n_conv = get_u32(in);
    if (!in || n_conv > 64) throw CnnFault("bad conv layer count");
    w.conv.resize(n_conv);
    for (auto& c : w.conv) {
        c.filters = get_u32(in);
        c.kernels = get_u32(in);
        c.kh = get_u32(in);
        c.kw = get_u32(in);
    }
    w.fc.out_dim = get_u32(in);
    w.fc.in_dim = get_u32(in);
    if (!in) throw CnnFault("truncated CNNW header");
    for (auto& c : w.conv) {
        c.weights.resize(static_cast<size_t>(c.filters) * c.kernels * c.kh * c.kw);
        c.bias.resize(c.filters);
        for (auto& v : c.weights) v = get_q15(in);
        for (auto& v : c.bias) v = get_q15(in);
    }
    w.fc.weights.resize(w.fc.out_dim * w.fc.in_dim);
    w.fc.bias.resize(w.fc.out_dim);
    for (auto& v : w.fc.weights) v = get_q15(in);
    for (auto& v : w.fc.bias) v = get_q15(in);
    if (!in) throw CnnFault("truncated CNNW payload");
    return w;
}

void save_weights_file(const NetworkWeights& w, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CnnFault("cannot open " + path + " for writing");
    save_weights(w, f);
}

NetworkWeights load_weights_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CnnFault("cannot open " + path);
    return load_weights(f);
}

uint32_t words_for_network(const NetworkConfig& cfg) {
    auto words_for = [](size_t elements) { return static_cast<uint32_t>((elements + 15) / 16); };
    uint32_t total = 0;
    total += words_for(static_cast<size_t>(cfg.input_h) * cfg.input_w * cfg.input_c);
    for (uint32_t l = 0; l < cfg.conv_layers; ++l) {
        total += words_for(static_cast<size_t>(cfg.filters) * cfg.layer_kernels(l) * cfg.kernel *
                           cfg.kernel);
        total += words_for(cfg.filters);
    }
    total += words_for(cfg.fc_out * cfg.fc_in());
    total += words_for(cfg.fc_out);
    total += 2 * words_for(static_cast<size_t>(cfg.input_h) * cfg.input_w * cfg.filters);
    return total + 16;
}

LoadedNetwork stage_weights(CnnMemory& mem, const NetworkConfig& cfg, const NetworkWeights& w) {
    if (w.conv.size() != cfg.conv_layers) throw CnnFault("conv layer count mismatch");
    LoadedNetwork net;
    net.cfg = cfg;
    for (uint32_t l = 0; l < cfg.conv_layers; ++l) {
        const auto& c = w.conv[l];
        if (c.filters != cfg.filters || c.kernels != cfg.layer_kernels(l) || c.kh != cfg.kernel ||
            c.kw != cfg.kernel)
            throw CnnFault("conv layer " + std::to_string(l) + " dimensions mismatch");
        LoadedConvLayer lc;
        lc.filters = c.filters;
        lc.kernels = c.kernels;
        lc.weights = mem.allocate_words(static_cast<uint32_t>((c.weights.size() + 15) / 16));
        lc.bias = mem.allocate_words(static_cast<uint32_t>((c.bias.size() + 15) / 16));
        for (size_t i = 0; i < c.weights.size(); ++i)
            mem.set(CnnMemory::element_index(lc.weights, 0) + i, c.weights[i]);
        for (size_t i = 0; i < c.bias.size(); ++i)
            mem.set(CnnMemory::element_index(lc.bias, 0) + i, c.bias[i]);
        net.conv.push_back(lc);
    }
    if (w.fc.out_dim != cfg.fc_out || w.fc.in_dim != cfg.fc_in())
        throw CnnFault("fc dimensions mismatch");
    net.fc_weights = mem.allocate_words(static_cast<uint32_t>((w.fc.weights.size() + 15) / 16));
    net.fc_bias = mem.allocate_words(static_cast<uint32_t>((w.fc.bias.size() + 15) / 16));
    for (size_t i = 0; i < w.fc.weights.size(); ++i)
        mem.set(CnnMemory::element_index(net.fc_weights, 0) + i, w.fc.weights[i]);
    for (size_t i = 0; i < w.fc.bias.size(); ++i)
        mem.set(CnnMemory::element_index(net.fc_bias, 0) + i, w.fc.bias[i]);
    return net;
}

void CnnEngine::conv2d(const Tensor& in, const LoadedConvLayer& layer, const Tensor& dst) {
    if (layer.kernels != in.c)
        throw CnnFault("conv layer expects " + std::to_string(layer.kernels) + " kernels, input has " +
                       std::to_string(in.c) + " channels");
    if (dst.h != in.h || dst.w != in.w || dst.c != layer.filters)
        throw CnnFault("conv destination tensor dimensions mismatch");

    const uint32_t H = in.h, W = in.w;
    auto wt = [&](uint32_t f, uint32_t k, uint32_t ky, uint32_t kx) {
        size_t idx = ((static_cast<size_t>(f) * layer.kernels + k) * 3 + ky) * 3 + kx;
        return mem_.at(CnnMemory::element_index(layer.weights, 0) + idx);
    };
    auto bias = [&](uint32_t f) { return mem_.at(CnnMemory::element_index(layer.bias, 0) + f); };

    // Row-stationary schedule: each filter row stays pinned while it sweeps
    // an input row; partial sums for a whole output row accumulate in the
    // row buffer. Accumulation is exact, so the order cannot change values.
    std::vector<int64_t> acc(static_cast<size_t>(W) * layer.filters);
    for (uint32_t y = 0; y < H; ++y) {
        for (uint32_t f = 0; f < layer.filters; ++f)
            for (uint32_t x = 0; x < W; ++x) acc[static_cast<size_t>(f) * W + x] = bias(f);
        for (uint32_t ky = 0; ky < 3; ++ky) {
            int64_t iy = static_cast<int64_t>(y) + ky - 1;
            bool row_in = iy >= 0 && iy < H;
            for (uint32_t k = 0; k < layer.kernels; ++k) {
                for (uint32_t f = 0; f < layer.filters; ++f) {
                    const Q15 w0 = wt(f, k, ky, 0), w1 = wt(f, k, ky, 1), w2 = wt(f, k, ky, 2);
                    int64_t* arow = acc.data() + static_cast<size_t>(f) * W;
                    for (uint32_t x = 0; x < W; ++x) {
                        Q15 left = (row_in && x > 0)
                                       ? tensor_at(mem_, in, static_cast<uint32_t>(iy), x - 1, k)
                                       : 0;
                        Q15 mid = row_in ? tensor_at(mem_, in, static_cast<uint32_t>(iy), x, k) : 0;
                        Q15 right = (row_in && x + 1 < W)
                                        ? tensor_at(mem_, in, static_cast<uint32_t>(iy), x + 1, k)
                                        : 0;
                        arow[x] += q15_mul(left, w0);
                        arow[x] += q15_mul(mid, w1);
                        arow[x] += q15_mul(right, w2);
                        macs_ += 3;
                    }
                }
            }
        }
        for (uint32_t f = 0; f < layer.filters; ++f)
            for (uint32_t x = 0; x < W; ++x)
                tensor_set(mem_, dst, y, x, f,
                           q15_saturate(static_cast<long>(acc[static_cast<size_t>(f) * W + x])));
    }
}

void CnnEngine::relu(const Tensor& t) {
    size_t base = CnnMemory::element_index(t.base, 0);
    for (size_t i = 0; i < t.elements(); ++i) {
        Q15 v = mem_.at(base + i);
        if (v < 0) mem_.set(base + i, 0);
    }
}

std::vector<Q15> CnnEngine::fully_connected(const Tensor& in, CnnAddr weights, CnnAddr bias,
                                            uint32_t out_dim) {
    size_t in_dim = in.elements();
    std::vector<Q15> out(out_dim);
    size_t wbase = CnnMemory::element_index(weights, 0);
    for (uint32_t o = 0; o < out_dim; ++o) {
        int64_t acc = mem_.at(CnnMemory::element_index(bias, 0) + o);
        size_t i = 0;
        // flatten row-major: h, then w, then channel
        for (uint32_t y = 0; y < in.h; ++y)
            for (uint32_t x = 0; x < in.w; ++x)
                for (uint32_t ch = 0; ch < in.c; ++ch, ++i) {
                    acc += q15_mul(tensor_at(mem_, in, y, x, ch),
                                   mem_.at(wbase + static_cast<size_t>(o) * in_dim + i));
                    ++macs_;
                }
        out[o] = q15_saturate(static_cast<long>(acc));
    }
    return out;
}

CnnRunResult CnnEngine::run_network(const Tensor& input, const LoadedNetwork& net) {
    const auto& cfg = net.cfg;
    if (input.h != cfg.input_h || input.w != cfg.input_w || input.c != cfg.input_c)
        throw CnnFault("input tensor does not match the network configuration");

    uint64_t macs_before = macs_;
    uint32_t act_words =
        static_cast<uint32_t>((static_cast<size_t>(cfg.input_h) * cfg.input_w * cfg.filters + 15) / 16);
    Tensor ping{cfg.input_h, cfg.input_w, cfg.filters, mem_.allocate_words(act_words)};
    Tensor pong{cfg.input_h, cfg.input_w, cfg.filters, mem_.allocate_words(act_words)};

    Tensor cur = input;
    for (uint32_t l = 0; l < cfg.conv_layers; ++l) {
        Tensor& dst = (l % 2 == 0) ? ping : pong;
        conv2d(cur, net.conv[l], dst);
        relu(dst);
        cur = dst;
    }
    CnnRunResult res;
    res.position = fully_connected(cur, net.fc_weights, net.fc_bias, cfg.fc_out);
    res.macs = macs_ - macs_before;
    res.cycles = (res.macs + cfg.pe_parallelism - 1) / cfg.pe_parallelism +
                 static_cast<uint64_t>(cfg.layer_overhead_cycles) * (cfg.conv_layers + 1);
    return res;
}

} // namespace asip
