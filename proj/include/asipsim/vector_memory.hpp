#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "asipsim/bf16.hpp"

namespace asip {

// One parallel-vector-memory word: 16 complex bf16 lanes (512 bits).
using VectorWord = std::array<CBf16, 16>;

inline VectorWord zero_word() {
    VectorWord w;
    w.fill(CBf16::zero());
    return w;
}

using VAddr = uint32_t; // index into the vector-word array

// Base address plus dimensions of a matrix stored block-wise column-major.
// rows and cols must be positive multiples of 16.
struct MatrixHandle {
    VAddr base = 0;
    uint32_t rows = 0;
    uint32_t cols = 0;

    uint32_t row_blocks() const { return rows / 16; }
    uint32_t col_blocks() const { return cols / 16; }
    uint32_t words() const { return row_blocks() * col_blocks() * 16; }
    VAddr end() const { return base + words(); }
    bool contains(VAddr a) const { return a >= base && a < end(); }
};

enum class AccessMode : uint8_t { linear = 0, shuffled_row = 1, shuffled_column = 2 };

struct MemoryFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProtocolFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The parallel vector memory shared by the vector core and the systolic
// array. Matrices are flattened into 16x16 blocks placed column-major by
// block coordinate; within a block, word i holds row i and lane j column j.
// Shuffled accesses fetch one 16-element row or column chunk of a block in
// a single cycle; the data shuffler hardware is modeled behaviorally.
class ParallelVectorMemory {
public:
    // 512 kB = 8192 words of 16 complex bf16 elements.
    static constexpr uint32_t kDefaultWords = 8192;

    explicit ParallelVectorMemory(uint32_t capacity_words = kDefaultWords)
        : words_(capacity_words, zero_word()) {}

    uint32_t capacity() const { return static_cast<uint32_t>(words_.size()); }

    // (word address, lane) of element (row, col) of a registered layout.
    static std::pair<VAddr, unsigned> block_layout_position(const MatrixHandle& h, uint32_t row,
                                                            uint32_t col);

    // Bump allocation + registration for shuffled-access validation.
    MatrixHandle register_matrix(uint32_t rows, uint32_t cols);
    // Register a matrix at a caller-chosen address (used by loaders).
    MatrixHandle register_matrix_at(VAddr base, uint32_t rows, uint32_t cols);
    const std::vector<MatrixHandle>& registered() const { return handles_; }
    std::optional<MatrixHandle> handle_containing(VAddr a) const;
    std::optional<MatrixHandle> handle_at(VAddr base) const;
    void reset_allocator(VAddr next = 0) { next_free_ = next; handles_.clear(); }
    VAddr allocator_mark() const { return next_free_; }

    VectorWord read(VAddr addr, AccessMode mode = AccessMode::linear) const;
    void write(VAddr addr, const VectorWord& w, uint16_t lane_mask = 0xFFFF,
               AccessMode mode = AccessMode::linear);

    // Raw word access for host-side setup (no mode semantics).
    const VectorWord& word(VAddr a) const { check_addr(a); return words_[a]; }
    VectorWord& word(VAddr a) { check_addr(a); return words_[a]; }

    CBf16 element(const MatrixHandle& h, uint32_t r, uint32_t c) const;
    void set_element(const MatrixHandle& h, uint32_t r, uint32_t c, CBf16 v);

private:
    void check_addr(VAddr a) const {
        if (a >= words_.size()) throw MemoryFault("vector address out of bounds: " + std::to_string(a));
    }
    // Resolves a shuffled access to (handle, word base of the block, lane).
    struct ShuffleRef {
        VAddr block_word0;
        unsigned lane;
    };
    ShuffleRef resolve_column(VAddr addr) const;

    std::vector<VectorWord> words_;
    std::vector<MatrixHandle> handles_;
    VAddr next_free_ = 0;
};

// Q1.15 fixed point, the CNN accelerator's native element type.
using Q15 = int16_t;

inline Q15 q15_saturate(long v) {
    if (v > 32767) return 32767;
    if (v < -32768) return -32768;
    return static_cast<Q15>(v);
}

// round-to-nearest, half away from zero, then saturate
Q15 q15_from_double(double v);

inline double q15_to_double(Q15 q) { return static_cast<double>(q) / 32768.0; }

// Saturating Q15 multiply with round-to-nearest on the 2^-15 rescale.
Q15 q15_mul(Q15 a, Q15 b);

using CnnAddr = uint32_t; // word index into the CNN vector memory

// Private vector memory of the CNN accelerator: 16 Q1.15 lanes per word,
// address space disjoint from the parallel vector memory.
class CnnMemory {
public:
    // 614 kB = 19648 words of 16 Q15 lanes.
    static constexpr uint32_t kDefaultWords = 19648;

    explicit CnnMemory(uint32_t capacity_words = kDefaultWords)
        : data_(static_cast<size_t>(capacity_words) * 16, 0) {}

    uint32_t capacity_words() const { return static_cast<uint32_t>(data_.size() / 16); }
    size_t capacity_elements() const { return data_.size(); }

    Q15 at(size_t element_index) const;
    void set(size_t element_index, Q15 v);

    // element index of lane `lane` of word `w`
    static size_t element_index(CnnAddr w, unsigned lane) { return static_cast<size_t>(w) * 16 + lane; }

    CnnAddr allocate_words(uint32_t n);
    void reset_allocator() { next_free_ = 0; }

private:
    std::vector<Q15> data_;
    CnnAddr next_free_ = 0;
};

struct DmaResult {
    bool ok = false;
    uint64_t cycles = 0;
    std::string error;
};

// Copy a complex matrix from the parallel vector memory into the CNN
// memory as two real Q1.15 planes (row-major), scaling each component by
// `scale` before conversion. Runs unsupervised; cost is two cycles per
// source word plus eight setup cycles.
DmaResult dma_copy_split(const ParallelVectorMemory& src_mem, const MatrixHandle& src,
                         CnnMemory& dst_mem, CnnAddr dst_re, CnnAddr dst_im, float scale);

} // namespace asip
