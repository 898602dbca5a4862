#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "asipsim/vector_memory.hpp"

namespace asip {

struct CnnFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Descriptor of a Q15 tensor resident in the CNN vector memory,
// plane-major: element (y, x, ch) lives at ch*h*w + y*w + x.
struct Tensor {
    uint32_t h = 0, w = 0, c = 0;
    CnnAddr base = 0; // word address

    size_t elements() const { return static_cast<size_t>(h) * w * c; }
    uint32_t words() const { return static_cast<uint32_t>((elements() + 15) / 16); }
    size_t index(uint32_t y, uint32_t x, uint32_t ch) const {
        return CnnMemory::element_index(base, 0) + static_cast<size_t>(ch) * h * w +
               static_cast<size_t>(y) * w + x;
    }
};

Q15 tensor_at(const CnnMemory& mem, const Tensor& t, uint32_t y, uint32_t x, uint32_t ch);
void tensor_set(CnnMemory& mem, const Tensor& t, uint32_t y, uint32_t x, uint32_t ch, Q15 v);

// Four 3x3 same-padded stride-1 conv layers of 16 filters each, ReLU
// between, then a fully connected head. The first layer has one kernel
// per input channel (2), the rest 16.
struct NetworkConfig {
    uint32_t input_h = 64;
    uint32_t input_w = 128;
    uint32_t input_c = 2;
    uint32_t conv_layers = 4;
    uint32_t filters = 16;
    uint32_t kernel = 3;
    uint32_t fc_out = 2;
    uint32_t pe_parallelism = 32;       // MACs retired per cycle
    uint32_t layer_overhead_cycles = 64;

    uint32_t layer_kernels(uint32_t layer) const { return layer == 0 ? input_c : filters; }
    size_t fc_in() const { return static_cast<size_t>(input_h) * input_w * filters; }
};

// MACs of the full network; padding positions count, the engine multiplies
// by zero just like the datapath would.
uint64_t analytic_macs(const NetworkConfig& cfg);
uint64_t analytic_conv_macs(const NetworkConfig& cfg, uint32_t layer);

// Host-side weight container (row-major [filter][kernel][ky][kx]).
struct ConvWeights {
    uint32_t filters = 0, kernels = 0, kh = 3, kw = 3;
    std::vector<Q15> weights;
    std::vector<Q15> bias;
    Q15 at(uint32_t f, uint32_t k, uint32_t ky, uint32_t kx) const {
        return weights[((static_cast<size_t>(f) * kernels + k) * kh + ky) * kw + kx];
    }
};

struct FcWeights {
    uint32_t out_dim = 0;
    size_t in_dim = 0;
    std::vector<Q15> weights; // [out][in]
    std::vector<Q15> bias;
};

struct NetworkWeights {
    std::vector<ConvWeights> conv;
    FcWeights fc;
};

NetworkWeights random_weights(const NetworkConfig& cfg, uint64_t seed);

// CNNW weight container: magic, layer dims, raw little-endian Q15 payload.
void save_weights(const NetworkWeights& w, std::ostream& out);
NetworkWeights load_weights(std::istream& in);
void save_weights_file(const NetworkWeights& w, const std::string& path);
NetworkWeights load_weights_file(const std::string& path);

// Weight tensors staged into the CNN memory (the engine reads coefficients
// from its own vector memory, never from host structures).
struct LoadedConvLayer {
    uint32_t filters = 0, kernels = 0;
    CnnAddr weights = 0; // [f][k][ky][kx]
    CnnAddr bias = 0;    // [f]
};
struct LoadedNetwork {
    NetworkConfig cfg;
    std::vector<LoadedConvLayer> conv;
    CnnAddr fc_weights = 0;
    CnnAddr fc_bias = 0;
};

// Words the default allocation scheme needs: input + weights + two
// ping-pong activation buffers + the fc head.
uint32_t words_for_network(const NetworkConfig& cfg);

LoadedNetwork stage_weights(CnnMemory& mem, const NetworkConfig& cfg, const NetworkWeights& w);

struct CnnRunResult {
    std::vector<Q15> position;
    uint64_t cycles = 0;
    uint64_t macs = 0;
};

// Fixed-point inference engine with a row-stationary convolution loop.
// Each product is rounded to Q15, partial sums accumulate exactly and the
// output saturates once; the schedule cannot change values.
class CnnEngine {
public:
    explicit CnnEngine(CnnMemory& mem) : mem_(mem) {}

    // dst must already be allocated with dims (in.h, in.w, layer.filters)
    void conv2d(const Tensor& in, const LoadedConvLayer& layer, const Tensor& dst);
    void relu(const Tensor& t);
    std::vector<Q15> fully_connected(const Tensor& in, CnnAddr weights, CnnAddr bias,
                                     uint32_t out_dim);

    CnnRunResult run_network(const Tensor& input, const LoadedNetwork& net);

    uint64_t mac_count() const { return macs_; }
    void reset_mac_count() { macs_ = 0; }

    CnnMemory& memory() { return mem_; }

private:
    CnnMemory& mem_;
    uint64_t macs_ = 0;
};

} // namespace asip
