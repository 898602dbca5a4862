#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "asipsim/cnn.hpp"

using namespace asip;

namespace {

// direct per-output convolution, the reference the row-stationary
// schedule must reproduce bit for bit
std::vector<Q15> conv_reference(const CnnMemory& mem, const Tensor& in, const ConvWeights& w) {
    std::vector<Q15> out(static_cast<size_t>(in.h) * in.w * w.filters);
    for (uint32_t f = 0; f < w.filters; ++f) {
        for (uint32_t y = 0; y < in.h; ++y) {
            for (uint32_t x = 0; x < in.w; ++x) {
                int64_t acc = w.bias[f];
                for (uint32_t k = 0; k < w.kernels; ++k)
                    for (uint32_t ky = 0; ky < 3; ++ky)
                        for (uint32_t kx = 0; kx < 3; ++kx) {
                            int64_t iy = static_cast<int64_t>(y) + ky - 1;
                            int64_t ix = static_cast<int64_t>(x) + kx - 1;
                            Q15 v = (iy >= 0 && iy < in.h && ix >= 0 && ix < in.w)
                                        ? tensor_at(mem, in, static_cast<uint32_t>(iy),
                                                    static_cast<uint32_t>(ix), k)
                                        : 0;
                            acc += q15_mul(v, w.at(f, k, ky, kx));
                        }
                out[(static_cast<size_t>(f) * in.h + y) * in.w + x] = q15_saturate(static_cast<long>(acc));
            }
        }
    }
    return out;
}

Tensor make_tensor(CnnMemory& mem, uint32_t h, uint32_t w, uint32_t c) {
    return Tensor{h, w, c, mem.allocate_words(static_cast<uint32_t>((static_cast<size_t>(h) * w * c + 15) / 16))};
}

void fill_random(CnnMemory& mem, const Tensor& t, std::mt19937& rng, int lo = -12000,
                 int hi = 12000) {
    std::uniform_int_distribution<int> d(lo, hi);
    for (uint32_t ch = 0; ch < t.c; ++ch)
        for (uint32_t y = 0; y < t.h; ++y)
            for (uint32_t x = 0; x < t.w; ++x) tensor_set(mem, t, y, x, ch, static_cast<Q15>(d(rng)));
}

} // namespace

TEST_CASE("identity kernel passes small inputs through") {
    CnnMemory mem(1024);
    CnnEngine eng(mem);
    NetworkConfig cfg;
    ConvWeights w;
    w.filters = 1;
    w.kernels = 1;
    w.weights.assign(9, 0);
    w.weights[4] = 32767; // center tap ~= 1 - 2^-15; exact below 2^14
    w.bias.assign(1, 0);
    NetworkWeights nw;
    nw.conv.push_back(w);
    cfg.conv_layers = 1;
    cfg.filters = 1;
    cfg.input_h = 8;
    cfg.input_w = 8;
    cfg.input_c = 1;
    nw.fc.out_dim = cfg.fc_out = 1;
    nw.fc.in_dim = cfg.fc_in();
    nw.fc.weights.assign(nw.fc.in_dim, 0);
    nw.fc.bias.assign(1, 0);

    auto net = stage_weights(mem, cfg, nw);
    Tensor in = make_tensor(mem, 8, 8, 1);
    Tensor out = make_tensor(mem, 8, 8, 1);
    std::mt19937 rng(1);
    fill_random(mem, in, rng);
    eng.conv2d(in, net.conv[0], out);
    for (uint32_t y = 0; y < 8; ++y)
        for (uint32_t x = 0; x < 8; ++x)
            CHECK(tensor_at(mem, out, y, x, 0) == tensor_at(mem, in, y, x, 0));
}

TEST_CASE("all-zero input yields the bias plane") {
    CnnMemory mem(1024);
    CnnEngine eng(mem);
    ConvWeights w;
    w.filters = 3;
    w.kernels = 2;
    w.weights.assign(static_cast<size_t>(3) * 2 * 9, 5000);
    w.bias = {100, -200, 300};
    NetworkConfig cfg{.input_h = 4, .input_w = 4, .input_c = 2, .conv_layers = 1, .filters = 3,
                      .fc_out = 1};
    NetworkWeights nw;
    nw.conv.push_back(w);
    nw.fc.out_dim = 1;
    nw.fc.in_dim = cfg.fc_in();
    nw.fc.weights.assign(nw.fc.in_dim, 0);
    nw.fc.bias.assign(1, 0);
    auto net = stage_weights(mem, cfg, nw);
    Tensor in = make_tensor(mem, 4, 4, 2);
    Tensor out = make_tensor(mem, 4, 4, 3);
    eng.conv2d(in, net.conv[0], out);
    for (uint32_t f = 0; f < 3; ++f)
        for (uint32_t y = 0; y < 4; ++y)
            for (uint32_t x = 0; x < 4; ++x) CHECK(tensor_at(mem, out, y, x, f) == w.bias[f]);
}

TEST_CASE("row-stationary conv matches the direct reference on 200 random tensors") {
    std::mt19937 rng(0xC0117);
    std::uniform_int_distribution<int> hw(3, 10);
    std::uniform_int_distribution<int> chan(1, 3);
    std::uniform_int_distribution<int> filt(1, 4);
    std::uniform_int_distribution<int> wv(-20000, 20000);
    for (int t = 0; t < 200; ++t) {
        uint32_t h = hw(rng), w = hw(rng), c = chan(rng), f = filt(rng);
        CnnMemory mem(2048);
        CnnEngine eng(mem);
        ConvWeights cw;
        cw.filters = f;
        cw.kernels = c;
        cw.weights.resize(static_cast<size_t>(f) * c * 9);
        cw.bias.resize(f);
        for (auto& v : cw.weights) v = static_cast<Q15>(wv(rng));
        for (auto& v : cw.bias) v = static_cast<Q15>(wv(rng));

        LoadedConvLayer layer;
        layer.filters = f;
        layer.kernels = c;
        layer.weights = mem.allocate_words(static_cast<uint32_t>((cw.weights.size() + 15) / 16));
        layer.bias = mem.allocate_words(1);
        for (size_t i = 0; i < cw.weights.size(); ++i)
            mem.set(CnnMemory::element_index(layer.weights, 0) + i, cw.weights[i]);
        for (size_t i = 0; i < cw.bias.size(); ++i)
            mem.set(CnnMemory::element_index(layer.bias, 0) + i, cw.bias[i]);

        Tensor in = make_tensor(mem, h, w, c);
        Tensor out = make_tensor(mem, h, w, f);
        fill_random(mem, in, rng, -32768, 32767);
        eng.conv2d(in, layer, out);
        auto ref = conv_reference(mem, in, cw);
        for (uint32_t ff = 0; ff < f; ++ff)
            for (uint32_t y = 0; y < h; ++y)
                for (uint32_t x = 0; x < w; ++x)
                    REQUIRE(tensor_at(mem, out, y, x, ff) ==
                            ref[(static_cast<size_t>(ff) * h + y) * w + x]);
    }
}

TEST_CASE("relu") {
    CnnMemory mem(64);
    CnnEngine eng(mem);
    Tensor t = make_tensor(mem, 2, 4, 1);
    tensor_set(mem, t, 0, 0, 0, -5);
    tensor_set(mem, t, 0, 1, 0, 7);
    tensor_set(mem, t, 1, 3, 0, -32768);
    eng.relu(t);
    CHECK(tensor_at(mem, t, 0, 0, 0) == 0);
    CHECK(tensor_at(mem, t, 0, 1, 0) == 7);
    CHECK(tensor_at(mem, t, 1, 3, 0) == 0);
    // idempotent
    std::vector<Q15> snapshot;
    for (size_t i = 0; i < t.elements(); ++i) snapshot.push_back(mem.at(CnnMemory::element_index(t.base, 0) + i));
    eng.relu(t);
    for (size_t i = 0; i < t.elements(); ++i)
        CHECK(mem.at(CnnMemory::element_index(t.base, 0) + i) == snapshot[i]);
}

TEST_CASE("fully connected") {
    CnnMemory mem(1024);
    CnnEngine eng(mem);
    Tensor in = make_tensor(mem, 2, 3, 2); // 12 inputs
    std::mt19937 rng(9);
    fill_random(mem, in, rng);

    SUBCASE("near-identity one-hot rows select flattened elements") {
        // row o selects flatten index o; flatten order is y, x, then channel
        uint32_t out_dim = 4;
        CnnAddr w = mem.allocate_words(4);
        CnnAddr b = mem.allocate_words(1);
        for (uint32_t o = 0; o < out_dim; ++o)
            for (size_t i = 0; i < 12; ++i)
                mem.set(CnnMemory::element_index(w, 0) + o * 12 + i,
                        (i == o) ? Q15{32767} : Q15{0});
        auto out = eng.fully_connected(in, w, b, out_dim);
        // flatten index o -> (y, x, ch) with ch fastest
        for (uint32_t o = 0; o < out_dim; ++o) {
            uint32_t ch = o % 2, x = (o / 2) % 3, y = o / 6;
            CHECK(out[o] == tensor_at(mem, in, y, x, ch));
        }
    }
    SUBCASE("zero weights return the bias") {
        CnnAddr w = mem.allocate_words(4);
        CnnAddr b = mem.allocate_words(1);
        mem.set(CnnMemory::element_index(b, 0) + 0, 1234);
        mem.set(CnnMemory::element_index(b, 0) + 1, -77);
        auto out = eng.fully_connected(in, w, b, 2);
        CHECK(out[0] == 1234);
        CHECK(out[1] == -77);
    }
    SUBCASE("random case matches a wide-integer dot product") {
        std::uniform_int_distribution<int> wv(-30000, 30000);
        CnnAddr w = mem.allocate_words(4);
        CnnAddr b = mem.allocate_words(1);
        std::vector<Q15> wts(2 * 12);
        for (auto& v : wts) v = static_cast<Q15>(wv(rng));
        for (size_t i = 0; i < wts.size(); ++i) mem.set(CnnMemory::element_index(w, 0) + i, wts[i]);
        mem.set(CnnMemory::element_index(b, 0), 11);
        mem.set(CnnMemory::element_index(b, 0) + 1, -22);
        auto out = eng.fully_connected(in, w, b, 2);
        for (uint32_t o = 0; o < 2; ++o) {
            long long acc = o == 0 ? 11 : -22;
            size_t i = 0;
            for (uint32_t y = 0; y < 2; ++y)
                for (uint32_t x = 0; x < 3; ++x)
                    for (uint32_t ch = 0; ch < 2; ++ch, ++i)
                        acc += q15_mul(tensor_at(mem, in, y, x, ch), wts[o * 12 + i]);
            CHECK(out[o] == q15_saturate(static_cast<long>(acc)));
        }
    }
}

TEST_CASE("mac accounting matches the analytic formula") {
    NetworkConfig small{.input_h = 8, .input_w = 8, .input_c = 2, .conv_layers = 2, .filters = 4,
                        .fc_out = 2};
    CHECK(analytic_conv_macs(small, 0) == 8ull * 8 * 4 * 2 * 9);
    CHECK(analytic_conv_macs(small, 1) == 8ull * 8 * 4 * 4 * 9);

    CnnMemory mem(words_for_network(small));
    CnnEngine eng(mem);
    auto nw = random_weights(small, 1);
    auto net = stage_weights(mem, small, nw);
    Tensor in = make_tensor(mem, 8, 8, 2);
    std::mt19937 rng(5);
    fill_random(mem, in, rng);
    auto res = eng.run_network(in, net);
    CHECK(res.macs == analytic_macs(small));
    CHECK(eng.mac_count() == analytic_macs(small));
}

TEST_CASE("default network lands on the published cycle budget") {
    NetworkConfig cfg;
    CHECK(analytic_conv_macs(cfg, 0) == 2359296);  // 64*128*16*(2*9)
    CHECK(analytic_conv_macs(cfg, 1) == 18874368); // 64*128*16*(16*9)
    CHECK(analytic_macs(cfg) == 2359296ull + 3 * 18874368 + 2 * 131072);

    CnnMemory mem(words_for_network(cfg));
    CnnEngine eng(mem);
    auto nw = random_weights(cfg, 7);
    auto net = stage_weights(mem, cfg, nw);
    Tensor in = make_tensor(mem, 64, 128, 2);
    std::mt19937 rng(6);
    fill_random(mem, in, rng, -8000, 8000);
    auto res = eng.run_network(in, net);
    CHECK(res.macs == analytic_macs(cfg));
    CHECK(res.position.size() == 2);
    CHECK(res.cycles >= 1'500'000);
    CHECK(res.cycles <= 2'600'000);
    double rate = 800e6 / static_cast<double>(res.cycles);
    CHECK(rate > 300);
    CHECK(rate < 550);
}

TEST_CASE("saturation monotonicity under weight doubling") {
    // doubling every weight and bias at least doubles the exact
    // pre-activation; per-term rounding can move a sum by at most one ulp
    // per product, so magnitudes above that slack must not shrink
    std::mt19937 rng(0x5A7);
    std::uniform_int_distribution<int> wv(-8000, 8000);
    for (int t = 0; t < 40; ++t) {
        CnnMemory mem(2048);
        Tensor in = make_tensor(mem, 6, 6, 2);
        fill_random(mem, in, rng);
        ConvWeights w1;
        w1.filters = 2;
        w1.kernels = 2;
        w1.weights.resize(2 * 2 * 9);
        w1.bias.resize(2);
        for (auto& v : w1.weights) v = static_cast<Q15>(wv(rng));
        for (auto& v : w1.bias) v = static_cast<Q15>(wv(rng));
        ConvWeights w2 = w1;
        for (auto& v : w2.weights) v = static_cast<Q15>(v * 2);
        for (auto& v : w2.bias) v = static_cast<Q15>(v * 2);

        // pre-saturation accumulators via the reference loop
        auto presat = [&](const ConvWeights& w) {
            std::vector<int64_t> acc;
            for (uint32_t f = 0; f < w.filters; ++f)
                for (uint32_t y = 0; y < in.h; ++y)
                    for (uint32_t x = 0; x < in.w; ++x) {
                        int64_t a = w.bias[f];
                        for (uint32_t k = 0; k < w.kernels; ++k)
                            for (uint32_t ky = 0; ky < 3; ++ky)
                                for (uint32_t kx = 0; kx < 3; ++kx) {
                                    int64_t iy = static_cast<int64_t>(y) + ky - 1;
                                    int64_t ix = static_cast<int64_t>(x) + kx - 1;
                                    Q15 v = (iy >= 0 && iy < in.h && ix >= 0 && ix < in.w)
                                                ? tensor_at(mem, in, iy, ix, k)
                                                : 0;
                                    a += q15_mul(v, w.at(f, k, ky, kx));
                                }
                        acc.push_back(a);
                    }
            return acc;
        };
        auto a1 = presat(w1), a2 = presat(w2);
        const int64_t slack = 2 * 2 * 9; // one ulp per product
        for (size_t i = 0; i < a1.size(); ++i) {
            if (std::abs(a1[i]) > 2 * slack) REQUIRE(std::abs(a2[i]) >= std::abs(a1[i]));
            REQUIRE(std::abs(a2[i]) + slack >= std::abs(a1[i]));
        }
    }
}

TEST_CASE("weight container round trip") {
    NetworkConfig cfg{.input_h = 8, .input_w = 8, .input_c = 2, .conv_layers = 2, .filters = 4,
                      .fc_out = 3};
    auto w = random_weights(cfg, 42);
    std::stringstream buf;
    save_weights(w, buf);
    auto back = load_weights(buf);
    REQUIRE(back.conv.size() == w.conv.size());
    for (size_t l = 0; l < w.conv.size(); ++l) {
        CHECK(back.conv[l].weights == w.conv[l].weights);
        CHECK(back.conv[l].bias == w.conv[l].bias);
    }
    CHECK(back.fc.weights == w.fc.weights);
    CHECK(back.fc.bias == w.fc.bias);

    std::stringstream bad("XXXXjunk");
    CHECK_THROWS_AS(load_weights(bad), CnnFault);
}

TEST_CASE("configuration mismatches fault") {
    NetworkConfig cfg{.input_h = 8, .input_w = 8, .input_c = 2, .conv_layers = 1, .filters = 4,
                      .fc_out = 2};
    CnnMemory mem(words_for_network(cfg));
    auto w = random_weights(cfg, 3);

    SUBCASE("kernel count vs input channels") {
        auto net = stage_weights(mem, cfg, w);
        CnnEngine eng(mem);
        Tensor wrong = make_tensor(mem, 8, 8, 3);
        Tensor out = make_tensor(mem, 8, 8, 4);
        CHECK_THROWS_AS(eng.conv2d(wrong, net.conv[0], out), CnnFault);
    }
    SUBCASE("staging rejects mismatched weights") {
        NetworkConfig other = cfg;
        other.filters = 8;
        CHECK_THROWS_AS(stage_weights(mem, other, w), CnnFault);
    }
    SUBCASE("run_network validates input dims") {
        auto net = stage_weights(mem, cfg, w);
        CnnEngine eng(mem);
        Tensor wrong = make_tensor(mem, 4, 4, 2);
        CHECK_THROWS_AS(eng.run_network(wrong, net), CnnFault);
    }
}
