#include "asipsim/vector_memory.hpp"

#include <cmath>

namespace asip {

std::pair<VAddr, unsigned> ParallelVectorMemory::block_layout_position(const MatrixHandle& h,
                                                                       uint32_t row, uint32_t col) {
    if (row >= h.rows || col >= h.cols)
        throw MemoryFault("matrix index (" + std::to_string(row) + "," + std::to_string(col) +
                          ") out of range for " + std::to_string(h.rows) + "x" +
                          std::to_string(h.cols));
    uint32_t br = row / 16, bc = col / 16;
    uint32_t block_index = bc * h.row_blocks() + br;
    return {h.base + block_index * 16 + (row % 16), col % 16};
}

MatrixHandle ParallelVectorMemory::register_matrix(uint32_t rows, uint32_t cols) {
    return register_matrix_at(next_free_, rows, cols);
}

MatrixHandle ParallelVectorMemory::register_matrix_at(VAddr base, uint32_t rows, uint32_t cols) {
    if (rows == 0 || cols == 0 || rows % 16 != 0 || cols % 16 != 0)
        throw MemoryFault("matrix dimensions must be positive multiples of 16");
    MatrixHandle h{base, rows, cols};
    if (h.end() > words_.size())
        throw MemoryFault("matrix of " + std::to_string(h.words()) +
                          " words does not fit at address " + std::to_string(base));
    handles_.push_back(h);
    if (h.end() > next_free_) next_free_ = h.end();
    return h;
}

std::optional<MatrixHandle> ParallelVectorMemory::handle_containing(VAddr a) const {
    for (const auto& h : handles_)
        if (h.contains(a)) return h;
    return std::nullopt;
}

std::optional<MatrixHandle> ParallelVectorMemory::handle_at(VAddr base) const {
    for (const auto& h : handles_)
        if (h.base == base) return h;
    return std::nullopt;
}

ParallelVectorMemory::ShuffleRef ParallelVectorMemory::resolve_column(VAddr addr) const {
    auto h = handle_containing(addr);
    if (!h) throw ProtocolFault("shuffled access at " + std::to_string(addr) +
                                " outside any registered matrix");
    uint32_t offset = addr - h->base;
    return {static_cast<VAddr>(h->base + (offset / 16) * 16), offset % 16};
}

VectorWord ParallelVectorMemory::read(VAddr addr, AccessMode mode) const {
    check_addr(addr);
    switch (mode) {
    case AccessMode::linear:
        return words_[addr];
    case AccessMode::shuffled_row: {
        auto h = handle_containing(addr);
        if (!h) throw ProtocolFault("shuffled access at " + std::to_string(addr) +
                                    " outside any registered matrix");
        return words_[addr]; // a block word holds one row chunk already
    }
    case AccessMode::shuffled_column: {
        ShuffleRef ref = resolve_column(addr);
        check_addr(ref.block_word0 + 15);
        VectorWord out;
        for (unsigned i = 0; i < 16; ++i) out[i] = words_[ref.block_word0 + i][ref.lane];
        return out;
    }
    }
    throw ProtocolFault("bad access mode");
}

void ParallelVectorMemory::write(VAddr addr, const VectorWord& w, uint16_t lane_mask,
                                 AccessMode mode) {
    check_addr(addr);
    if (lane_mask == 0) return;
    switch (mode) {
    case AccessMode::linear:
    case AccessMode::shuffled_row: {
        if (mode == AccessMode::shuffled_row && !handle_containing(addr))
            throw ProtocolFault("shuffled access at " + std::to_string(addr) +
                                " outside any registered matrix");
        if (lane_mask == 0xFFFF) {
            words_[addr] = w;
        } else {
            for (unsigned i = 0; i < 16; ++i)
                if (lane_mask & (1u << i)) words_[addr][i] = w[i];
        }
        return;
    }
    case AccessMode::shuffled_column: {
        ShuffleRef ref = resolve_column(addr);
        check_addr(ref.block_word0 + 15);
        for (unsigned i = 0; i < 16; ++i)
            if (lane_mask & (1u << i)) words_[ref.block_word0 + i][ref.lane] = w[i];
        return;
    }
    }
    throw ProtocolFault("bad access mode");
}

CBf16 ParallelVectorMemory::element(const MatrixHandle& h, uint32_t r, uint32_t c) const {
    auto [addr, lane] = block_layout_position(h, r, c);
    check_addr(addr);
    return words_[addr][lane];
}

void ParallelVectorMemory::set_element(const MatrixHandle& h, uint32_t r, uint32_t c, CBf16 v) {
    auto [addr, lane] = block_layout_position(h, r, c);
    check_addr(addr);
    words_[addr][lane] = v;
}

Q15 q15_from_double(double v) {
    double scaled = v * 32768.0;
    double r = scaled >= 0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
    if (r > 32767.0) return 32767;
    if (r < -32768.0) return -32768;
    return static_cast<Q15>(r);
}

Q15 q15_mul(Q15 a, Q15 b) {
    long p = static_cast<long>(a) * static_cast<long>(b); // 30 fractional bits
    long r = p >= 0 ? (p + 0x4000) >> 15 : -((-p + 0x4000) >> 15);
    return q15_saturate(r);
}

Q15 CnnMemory::at(size_t element_index) const {
    if (element_index >= data_.size())
        throw MemoryFault("CNN memory element index out of bounds: " + std::to_string(element_index));
    return data_[element_index];
}

void CnnMemory::set(size_t element_index, Q15 v) {
    if (element_index >= data_.size())
        throw MemoryFault("CNN memory element index out of bounds: " + std::to_string(element_index));
    data_[element_index] = v;
}

CnnAddr CnnMemory::allocate_words(uint32_t n) {
    if (static_cast<size_t>(next_free_) + n > capacity_words())
        throw MemoryFault("CNN memory allocation of " + std::to_string(n) + " words exceeds capacity");
    CnnAddr a = next_free_;
    next_free_ += n;
    return a;
}

DmaResult dma_copy_split(const ParallelVectorMemory& src_mem, const MatrixHandle& src,
                         CnnMemory& dst_mem, CnnAddr dst_re, CnnAddr dst_im, float scale) {
    DmaResult res;
    uint64_t elements = static_cast<uint64_t>(src.rows) * src.cols;
    uint64_t dst_words = (elements + 15) / 16;

    auto overlaps = [&](uint64_t a0, uint64_t a1, uint64_t b0, uint64_t b1) {
        return a0 < b1 && b0 < a1;
    };
    if (overlaps(dst_re, dst_re + dst_words, dst_im, dst_im + dst_words)) {
        res.error = "DMA destination planes overlap";
        return res;
    }
    if (dst_re + dst_words > dst_mem.capacity_words() ||
        dst_im + dst_words > dst_mem.capacity_words()) {
        res.error = "DMA destination exceeds CNN memory capacity";
        return res;
    }
    if (src.end() > src_mem.capacity()) {
        res.error = "DMA source exceeds parallel vector memory";
        return res;
    }

    uint64_t idx = 0;
    for (uint32_t r = 0; r < src.rows; ++r) {
        for (uint32_t c = 0; c < src.cols; ++c, ++idx) {
            CBf16 v = src_mem.element(src, r, c);
            double re = static_cast<double>(scale) * v.re.to_f64();
            double im = static_cast<double>(scale) * v.im.to_f64();
            dst_mem.set(CnnMemory::element_index(dst_re, 0) + idx, q15_from_double(re));
            dst_mem.set(CnnMemory::element_index(dst_im, 0) + idx, q15_from_double(im));
        }
    }
    res.ok = true;
    res.cycles = 2 * static_cast<uint64_t>(src.words()) + 8;
    return res;
}

} // namespace asip
