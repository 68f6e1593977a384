#pragma once

#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "depoison/tensor.hpp"

namespace depoison {

// ---------------------------------------------------------------------------
// CIFAR-10 binary (concatenated 3073-byte records: label, 1024 R, 1024 G,
// 1024 B, each plane row-major)
// ---------------------------------------------------------------------------

inline LabeledDataset load_cifar10_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    constexpr std::size_t kRecord = 3073;
    if (bytes.size() % kRecord != 0)
        throw FormatError(path + ": size " + std::to_string(bytes.size()) +
                          " is not a multiple of 3073");

    LabeledDataset ds;
    ds.num_classes = 10;
    const std::size_t n = bytes.size() / kRecord;
    ds.images.reserve(n);
    ds.labels.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const unsigned char* rec =
            reinterpret_cast<const unsigned char*>(bytes.data()) + r * kRecord;
        if (rec[0] > 9)
            throw FormatError(path + ": record " + std::to_string(r) +
                              " has label byte " + std::to_string(rec[0]));
        ImageTensor img(3, 32, 32);
        for (std::size_t i = 0; i < 3072; ++i)
            img.data[i] = static_cast<float>(rec[1 + i]) / 255.0f;
        ds.images.push_back(std::move(img));
        ds.labels.push_back(rec[0]);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255)
// ---------------------------------------------------------------------------

inline void save_ppm(const ImageTensor& image, const std::string& path) {
    if (image.channels != 3)
        throw ShapeError("save_ppm: image must have 3 channels, got " +
                         std::to_string(image.channels));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
                out.put(static_cast<char>(std::lround(v * 255.0f)));
            }
}

namespace detail {

inline int ppm_token(std::istream& in) {
    // whitespace- and comment-tolerant integer read
    int c = in.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#')
            while (c != '\n' && c != EOF) c = in.get();
        c = in.get();
    }
    int value = 0;
    bool any = false;
    while (std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw FormatError("ppm: malformed header");
    return value;
}

}  // namespace detail

inline ImageTensor load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P6") throw FormatError(path + ": not a P6 file");
    int w = detail::ppm_token(in);
    int h = detail::ppm_token(in);
    int maxval = detail::ppm_token(in);
    if (maxval != 255)
        throw FormatError(path + ": unsupported maxval " + std::to_string(maxval));
    ImageTensor img(3, h, w);
    std::vector<char> payload(static_cast<std::size_t>(w) * h * 3);
    in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (in.gcount() != static_cast<std::streamsize>(payload.size()))
        throw FormatError(path + ": truncated payload");
    std::size_t p = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) =
                    static_cast<float>(static_cast<unsigned char>(payload[p++])) /
                    255.0f;
    return img;
}

// ---------------------------------------------------------------------------
// ITNS tensor file: magic "ITNS", version byte 1, u32 rank, rank x u32 dims,
// payload of little-endian 32-bit floats. Roundtrip is bit-exact.
// ---------------------------------------------------------------------------

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

namespace detail {

inline void put_u32_le(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline std::uint32_t get_u32_le(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw FormatError(path + ": truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void save_tensor(const Tensor& t, const std::string& path) {
    if (t.dims.empty())
        throw std::invalid_argument("save_tensor: minimum rank is 1");
    if (t.data.size() != t.element_count())
        throw ShapeError("save_tensor: data length does not match dims");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out.write("ITNS", 4);
    out.put(1);  // version
    detail::put_u32_le(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) detail::put_u32_le(out, d);
    for (float v : t.data) {
        std::uint32_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, 4);
        detail::put_u32_le(out, bits);
    }
}

inline Tensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string(magic, 4) != "ITNS")
        throw FormatError(path + ": bad magic");
    int version = in.get();
    if (version != 1)
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    Tensor t;
    std::uint32_t rank = detail::get_u32_le(in, path);
    if (rank == 0) throw FormatError(path + ": rank 0 not allowed");
    t.dims.resize(rank);
    for (auto& d : t.dims) d = detail::get_u32_le(in, path);
    t.data.resize(t.element_count());
    for (auto& v : t.data) {
        std::uint32_t bits = detail::get_u32_le(in, path);
        std::memcpy(&v, &bits, 4);
    }
    return t;
}

inline void save_tensor(const ImageTensor& img, const std::string& path) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(img.channels),
              static_cast<std::uint32_t>(img.height),
              static_cast<std::uint32_t>(img.width)};
    t.data = img.data;
    save_tensor(t, path);
}

inline ImageTensor load_image_tensor(const std::string& path) {
    Tensor t = load_tensor(path);
    if (t.dims.size() != 3)
        throw FormatError(path + ": expected rank-3 image tensor, got rank " +
                          std::to_string(t.dims.size()));
    ImageTensor img(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                    static_cast<int>(t.dims[2]));
    img.data = std::move(t.data);
    return img;
}

// ---------------------------------------------------------------------------
// Dataset directory: images.itns (N x C x H x W) + labels.json
// ---------------------------------------------------------------------------

inline void save_dataset(const LabeledDataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    Tensor t;
    if (ds.size() == 0) {
        t.dims = {0, 0, 0, 0};
    } else {
        const auto& first = ds.images.front();
        t.dims = {static_cast<std::uint32_t>(ds.size()),
                  static_cast<std::uint32_t>(first.channels),
                  static_cast<std::uint32_t>(first.height),
                  static_cast<std::uint32_t>(first.width)};
        t.data.reserve(ds.size() * first.size());
        for (const auto& img : ds.images) {
            if (!img.same_shape(first))
                throw ShapeError("save_dataset: non-uniform image shapes");
            t.data.insert(t.data.end(), img.data.begin(), img.data.end());
        }
    }
    save_tensor(t, dir + "/images.itns");
    nlohmann::json j;
    j["num_classes"] = ds.num_classes;
    j["labels"] = ds.labels;
    std::ofstream out(dir + "/labels.json");
    out << j.dump(2) << "\n";
}

inline LabeledDataset load_dataset_dir(const std::string& dir) {
    Tensor t = load_tensor(dir + "/images.itns");
    if (t.dims.size() != 4)
        throw FormatError(dir + "/images.itns: expected rank-4 tensor");
    std::ifstream in(dir + "/labels.json");
    if (!in) throw FormatError("cannot open " + dir + "/labels.json");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir + "/labels.json: " + e.what());
    }
    LabeledDataset ds;
    ds.num_classes = j.at("num_classes").get<int>();
    ds.labels = j.at("labels").get<std::vector<int>>();
    const std::size_t n = t.dims[0];
    if (ds.labels.size() != n)
        throw FormatError(dir + ": label count does not match image count");
    const int c = static_cast<int>(t.dims[1]);
    const int h = static_cast<int>(t.dims[2]);
    const int w = static_cast<int>(t.dims[3]);
    const std::size_t per = static_cast<std::size_t>(c) * h * w;
    ds.images.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ImageTensor img(c, h, w);
        std::copy_n(t.data.begin() + i * per, per, img.data.begin());
        ds.images.push_back(std::move(img));
    }
    for (int lbl : ds.labels)
        if (lbl < 0 || lbl >= ds.num_classes)
            throw FormatError(dir + ": label out of range");
    return ds;
}

// A dataset path is either a CIFAR-10 .bin file or an ITNS dataset directory.
inline LabeledDataset load_dataset_any(const std::string& path) {
    if (std::filesystem::is_directory(path)) return load_dataset_dir(path);
    return load_cifar10_bin(path);
}

}  // namespace depoison
