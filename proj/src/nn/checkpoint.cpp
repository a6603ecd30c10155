#include "voin/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "voin/core/error.hpp"

namespace voin::nn {

namespace {

constexpr char kMagic[8] = {'V', 'O', 'I', 'N', 'C', 'K', 'P', 'T'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
public:
    Reader(std::vector<std::uint8_t> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

    template <class T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
        need(sizeof(U));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(U);
        return std::bit_cast<T>(bits);
    }
    std::string get_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }
    std::size_t size() const { return bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw FormatError(name_ + ": truncated checkpoint");
    }
    std::vector<std::uint8_t> bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store, const FlatConfig& meta) {
    std::vector<std::uint8_t> out(kMagic, kMagic + 8);
    put_le<std::uint32_t>(out, 1);
    const std::string meta_text = meta.to_text();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta_text.size()));
    out.insert(out.end(), meta_text.begin(), meta_text.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.entries().size()));
    std::uint64_t offset = 0;
    for (const auto& e : store.entries()) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.var.shape().size()));
        for (auto d : e.var.shape()) put_le<std::int64_t>(out, d);
        put_le<std::uint64_t>(out, offset);
        offset += static_cast<std::uint64_t>(e.var.numel());
    }
    for (const auto& e : store.entries()) {
        for (double v : e.var.value().values()) put_le<double>(out, v);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint " + path.string());
    Reader r({std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()}, path.string());
    if (r.get_string(8) != std::string(kMagic, 8)) throw FormatError(path.string() + ": not a checkpoint");
    if (r.get<std::uint32_t>() != 1) throw FormatError(path.string() + ": unsupported checkpoint version");
    Checkpoint ck;
    ck.meta = FlatConfig::parse(r.get_string(r.get<std::uint32_t>()));
    const auto count = r.get<std::uint32_t>();
    struct Entry {
        std::string name;
        Shape shape;
        std::uint64_t offset;
    };
    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        e.name = r.get_string(r.get<std::uint32_t>());
        const auto rank = r.get<std::uint32_t>();
        if (rank > 8) throw FormatError(path.string() + ": bad rank");
        for (std::uint32_t k = 0; k < rank; ++k) e.shape.push_back(r.get<std::int64_t>());
        e.offset = r.get<std::uint64_t>();
        entries.push_back(std::move(e));
    }
    const std::size_t payload = r.pos();
    std::vector<double> values((r.size() - payload) / 8);
    for (double& v : values) v = r.get<double>();
    for (auto& e : entries) {
        const auto n = static_cast<std::uint64_t>(numel(e.shape));
        if (e.offset + n > values.size()) throw FormatError(path.string() + ": array " + e.name + " out of range");
        std::vector<double> data(values.begin() + static_cast<std::ptrdiff_t>(e.offset),
                                 values.begin() + static_cast<std::ptrdiff_t>(e.offset + n));
        ck.arrays.emplace_back(e.name, Tensor(e.shape, std::move(data)));
    }
    return ck;
}

void load_into(ParamStore& store, const Checkpoint& ckpt) {
    if (ckpt.arrays.size() != store.entries().size()) {
        throw FormatError("checkpoint holds " + std::to_string(ckpt.arrays.size()) + " arrays, model expects " +
                          std::to_string(store.entries().size()));
    }
    for (const auto& [name, tensor] : ckpt.arrays) {
        Var v = store.get(name);
        if (v.shape() != tensor.shape()) {
            throw FormatError("checkpoint array " + name + " has shape " + shape_str(tensor.shape()) + ", model expects " +
                              shape_str(v.shape()));
        }
        v.mutable_value() = tensor;
    }
}

}  // namespace voin::nn
