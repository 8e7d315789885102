#pragma once

#include <cstddef>
#include <cstdlib>
#include <new>
#include <vector>

namespace wam {

// 64-byte-aligned allocator. Vectorized kernels pick their peeling by
// pointer alignment; pinning every numeric buffer to one alignment keeps
// floating-point reduction order, and therefore results, bit-reproducible
// across runs regardless of heap layout.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t alignment = 64;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) {
        if (n == 0) return nullptr;
        void* p = std::aligned_alloc(alignment, ((n * sizeof(T) + alignment - 1) / alignment) *
                                                    alignment);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { std::free(p); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const {
        return true;
    }
    template <typename U>
    bool operator!=(const AlignedAllocator<U>&) const {
        return false;
    }
};

template <typename T>
using AVec = std::vector<T, AlignedAllocator<T>>;

}  // namespace wam
