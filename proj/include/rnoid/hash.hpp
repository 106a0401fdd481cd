#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace rnoid {

// 64-bit FNV-1a, stable across platforms with the same double layout.
class Hasher {
public:
    Hasher& bytes(const void* data, std::size_t n)
    {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < n; ++k) {
            state_ ^= p[k];
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Hasher& add(std::string_view s) { return bytes(s.data(), s.size()).add(static_cast<std::uint64_t>(s.size())); }
    Hasher& add(double x)
    {
        if (x == 0.0) x = 0.0;   // -0 and +0 hash alike
        return bytes(&x, sizeof x);
    }
    Hasher& add(std::uint64_t x) { return bytes(&x, sizeof x); }
    Hasher& add(long long x) { return bytes(&x, sizeof x); }
    Hasher& add(int x) { return add(static_cast<long long>(x)); }
    Hasher& add(bool x) { return add(static_cast<long long>(x)); }

    std::uint64_t value() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string Hasher::hex() const
{
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int k = 15; k >= 0; --k, v >>= 4) out[k] = digits[v & 15];
    return out;
}

} // namespace rnoid
