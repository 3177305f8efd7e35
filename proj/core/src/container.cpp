// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/container.hpp"

#include "gscodec/error.hpp"
#include "gscodec/half.hpp"
#include "gscodec/postproc.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace gscodec {

namespace {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

constexpr std::size_t kHeaderBytes = 8 + 4 + 8;
constexpr std::size_t kCrcBytes = 4;
constexpr std::uint32_t kFlagPost = 1u << 0;
constexpr std::uint32_t kFlagLogScale = 1u << 1;
constexpr std::uint8_t kIndicesPacked = 0;
constexpr std::uint8_t kIndicesHuffman = 1;
constexpr std::uint8_t kPayloadRaw = 0;
constexpr std::uint8_t kPayloadHuffman = 1;

class Writer {
public:
    std::vector<std::uint8_t> bytes;

    template <typename T>
    void put(T value) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void put_bytes(std::span<const std::uint8_t> data) { bytes.insert(bytes.end(), data.begin(), data.end()); }
    void put_half(double v) { put(float_to_half(static_cast<float>(v))); }

    std::size_t begin_block() {
        put<std::uint64_t>(0);
        return bytes.size();
    }
    void end_block(std::size_t start) {
        const std::uint64_t length = bytes.size() - start;
        std::memcpy(bytes.data() + start - 8, &length, 8);
    }
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::span<const std::uint8_t> take(std::uint64_t n) {
        need(n);
        auto out = data_.subspan(pos_, static_cast<std::size_t>(n));
        pos_ += static_cast<std::size_t>(n);
        return out;
    }
    Reader block() { return Reader(take(get<std::uint64_t>())); }
    double get_half() { return half_to_float(get<std::uint16_t>()); }
    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_end(const char* what) const {
        if (remaining() != 0)
            throw DecodeError(DecodeError::Code::malformed, std::string("trailing bytes in ") + what);
    }

private:
    void need(std::uint64_t n) const {
        if (n > data_.size() - pos_) throw DecodeError(DecodeError::Code::truncated, "container is truncated");
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

void put_quantized(Writer& w, std::span<const double> values) {
    const QuantizedTensor q = quantize_u8(values);
    w.put(q.min);
    w.put(q.max);
    w.put<std::uint64_t>(q.size());
    const HuffmanBlob blob = huffman_encode(q.symbols);
    if (blob.serialized_size() < q.size()) {
        w.put(kPayloadHuffman);
        const std::size_t start = w.begin_block();
        append_huffman_blob(w.bytes, blob);
        w.end_block(start);
    } else {
        w.put(kPayloadRaw);
        w.put_bytes(q.symbols);
    }
}

std::vector<double> get_quantized(Reader& r, std::uint64_t expected) {
    QuantizedTensor q;
    q.min = r.get<float>();
    q.max = r.get<float>();
    const auto count = r.get<std::uint64_t>();
    if (count != expected) throw DecodeError(DecodeError::Code::malformed, "quantized tensor length mismatch");
    if (!(q.min <= q.max)) throw DecodeError(DecodeError::Code::malformed, "quantized tensor range is invalid");
    const auto flag = r.get<std::uint8_t>();
    if (flag == kPayloadRaw) {
        const auto raw = r.take(count);
        q.symbols.assign(raw.begin(), raw.end());
    } else if (flag == kPayloadHuffman) {
        q.symbols = huffman_decode(parse_huffman_blob(r.take(r.get<std::uint64_t>())));
        if (q.symbols.size() != count) throw DecodeError(DecodeError::Code::malformed, "Huffman symbol count mismatch");
    } else {
        throw DecodeError(DecodeError::Code::malformed, "unknown payload flag");
    }
    return dequantize(q);
}

void put_codec(Writer& w, const RvqCodec& codec, const IndexStream& stream, ScaleDomain domain, bool post) {
    codec.validate();
    if (stream.num_stages != codec.num_stages) throw Error("index stream stage count does not match its codec");
    w.put<std::uint32_t>(static_cast<std::uint32_t>(codec.num_stages));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(codec.codebook_size));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(codec.dim));
    w.put(static_cast<std::uint8_t>(domain));
    for (float v : codec.codebooks) w.put(v);

    const int bits = bits_for(codec.codebook_size);
    const auto packed = bitpack(stream.indices, bits);
    if (post && codec.codebook_size <= 256) {
        Writer huff;
        for (std::size_t s = 0; s < codec.num_stages; ++s) {
            std::vector<std::uint8_t> symbols(stream.count);
            for (std::size_t n = 0; n < stream.count; ++n) symbols[n] = static_cast<std::uint8_t>(stream.at(s, n));
            const std::size_t start = huff.begin_block();
            append_huffman_blob(huff.bytes, huffman_encode(symbols));
            huff.end_block(start);
        }
        if (huff.bytes.size() < packed.size()) {
            w.put(kIndicesHuffman);
            w.put_bytes(huff.bytes);
            return;
        }
    }
    w.put(kIndicesPacked);
    w.put_bytes(packed);
}

void get_codec(Reader r, std::uint64_t count, std::size_t dim, RvqCodec& codec, IndexStream& stream,
               ScaleDomain* domain) {
    const auto stages = r.get<std::uint32_t>();
    const auto size = r.get<std::uint32_t>();
    const auto d = r.get<std::uint32_t>();
    const auto dom = r.get<std::uint8_t>();
    if (d != dim || stages == 0 || size < 2 || size > 65536 || dom > 1)
        throw DecodeError(DecodeError::Code::malformed, "codec block header is invalid");
    if (domain) *domain = static_cast<ScaleDomain>(dom);
    codec = RvqCodec(d, stages, size);
    if (static_cast<std::uint64_t>(stages) * size * d * 4 > r.remaining())
        throw DecodeError(DecodeError::Code::truncated, "codebooks are truncated");
    for (float& v : codec.codebooks) v = r.get<float>();
    stream = IndexStream(static_cast<std::size_t>(count), stages);
    const auto flag = r.get<std::uint8_t>();
    if (flag == kIndicesPacked) {
        const int bits = bits_for(size);
        const std::uint64_t bytes = (count * stages * static_cast<std::uint64_t>(bits) + 7) / 8;
        stream.indices = bitunpack(r.take(bytes), bits, static_cast<std::size_t>(count) * stages);
    } else if (flag == kIndicesHuffman) {
        for (std::size_t s = 0; s < stages; ++s) {
            const auto symbols = huffman_decode(parse_huffman_blob(r.take(r.get<std::uint64_t>())));
            if (symbols.size() != count) throw DecodeError(DecodeError::Code::malformed, "index stream length mismatch");
            for (std::size_t n = 0; n < count; ++n) stream.at(s, n) = symbols[n];
        }
    } else {
        throw DecodeError(DecodeError::Code::malformed, "unknown index stream flag");
    }
    r.expect_end("codec block");
    for (std::uint16_t index : stream.indices)
        if (index >= size) throw DecodeError(DecodeError::Code::index_out_of_range, "code index out of range");
}

void put_field(Writer& w, const ColorField& field, const PostProcessFlags& post) {
    const std::size_t hash_start = w.begin_block();
    for (int level = 0; level < field.config().num_levels; ++level) {
        const auto table = field.table(level);
        if (!post.enabled) {
            for (double v : table) w.put_half(v);
            continue;
        }
        const PrunedTable pruned = prune_table(table, post.hash_prune_threshold);
        w.put_bytes(pruned.bitmap);
        w.put<std::uint64_t>(pruned.survivors.size());
        if (!pruned.survivors.empty()) put_quantized(w, pruned.survivors);
    }
    w.end_block(hash_start);
    const std::size_t mlp_start = w.begin_block();
    for (double v : field.mlp_parameters()) w.put_half(v);
    w.end_block(mlp_start);
}

void get_field(Reader r, const FieldConfig& config, bool post, ColorField& field) {
    field = ColorField(config);
    Reader hash = r.block();
    for (int level = 0; level < config.num_levels; ++level) {
        auto table = field.table(level);
        if (!post) {
            if (table.size() * 2 > hash.remaining()) throw DecodeError(DecodeError::Code::truncated, "hash table is truncated");
            for (double& v : table) v = hash.get_half();
            continue;
        }
        const auto bitmap = hash.take((table.size() + 7) / 8);
        const auto survivors = hash.get<std::uint64_t>();
        if (survivors > table.size()) throw DecodeError(DecodeError::Code::malformed, "too many hash survivors");
        std::vector<double> values;
        if (survivors > 0) values = get_quantized(hash, survivors);
        const auto dense = unprune_table(bitmap, table.size(), values);
        std::copy(dense.begin(), dense.end(), table.begin());
    }
    hash.expect_end("hash block");
    Reader mlp = r.block();
    auto params = field.mlp_parameters();
    for (double& v : params) v = mlp.get_half();
    mlp.expect_end("MLP block");
    r.expect_end("field block");
}

FieldConfig read_field_config(Reader& r) {
    FieldConfig c;
    c.num_levels = static_cast<int>(r.get<std::uint32_t>());
    c.features_per_level = static_cast<int>(r.get<std::uint32_t>());
    c.base_resolution = static_cast<int>(r.get<std::uint32_t>());
    c.max_resolution = static_cast<int>(r.get<std::uint32_t>());
    c.max_hashmap = r.get<std::uint32_t>();
    c.mlp_hidden = static_cast<int>(r.get<std::uint32_t>());
    c.mlp_layers = static_cast<int>(r.get<std::uint32_t>());
    return c;
}

}  // namespace

std::vector<std::uint8_t> encode_file(const SceneEncodeInput& input) {
    const std::size_t n = input.positions.size();
    if (input.opacities.size() != n) throw Error("opacity count does not match positions");
    const bool has_geometry = input.scale_codec && input.scale_indices && input.rotation_codec && input.rotation_indices;
    if (n > 0 && !has_geometry) throw Error("scale and rotation codecs are required");
    if (n > 0 && (!input.field || input.field->empty())) throw Error("a trained color field is required");
    if (has_geometry && (input.scale_indices->count != n || input.rotation_indices->count != n))
        throw Error("index stream count does not match positions");
    if (has_geometry && (input.scale_codec->dim != 3 || input.rotation_codec->dim != 4))
        throw Error("scale codec must be 3-D and rotation codec 4-D");
    if (has_geometry && input.scale_codec->num_stages != input.rotation_codec->num_stages)
        throw Error("scale and rotation codecs must share the stage count");
    if (has_geometry && input.scale_codec->codebook_size != input.rotation_codec->codebook_size)
        throw Error("scale and rotation codecs must share the codebook size");

    Writer w;
    w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(kContainerMagic.data()), kContainerMagic.size()));
    w.put(kContainerVersion);
    w.put<std::uint64_t>(n);

    const FieldConfig field_config = input.field ? input.field->config() : FieldConfig{};
    Writer flags;
    std::uint32_t bits = 0;
    if (input.post.enabled) bits |= kFlagPost;
    if (input.scale_domain == ScaleDomain::log) bits |= kFlagLogScale;
    flags.put(bits);
    flags.put(static_cast<std::uint8_t>(input.mask_mode));
    flags.put<std::uint32_t>(has_geometry ? static_cast<std::uint32_t>(input.scale_codec->codebook_size) : 0);
    flags.put<std::uint32_t>(has_geometry ? static_cast<std::uint32_t>(input.scale_codec->num_stages) : 0);
    for (std::uint32_t v : {static_cast<std::uint32_t>(field_config.num_levels),
                            static_cast<std::uint32_t>(field_config.features_per_level),
                            static_cast<std::uint32_t>(field_config.base_resolution),
                            static_cast<std::uint32_t>(field_config.max_resolution), field_config.max_hashmap,
                            static_cast<std::uint32_t>(field_config.mlp_hidden),
                            static_cast<std::uint32_t>(field_config.mlp_layers)})
        flags.put(v);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(flags.bytes.size()));
    w.put_bytes(flags.bytes);

    std::size_t start = w.begin_block();
    for (const Vec3& p : input.positions)
        for (int c = 0; c < 3; ++c) w.put_half(p[c]);
    w.end_block(start);

    start = w.begin_block();
    if (input.post.enabled && n > 0) {
        put_quantized(w, input.opacities);
    } else {
        for (double o : input.opacities) w.put_half(o);
    }
    w.end_block(start);

    start = w.begin_block();
    if (has_geometry) put_codec(w, *input.scale_codec, *input.scale_indices, input.scale_domain, input.post.enabled);
    w.end_block(start);
    start = w.begin_block();
    if (has_geometry) put_codec(w, *input.rotation_codec, *input.rotation_indices, ScaleDomain::linear, input.post.enabled);
    w.end_block(start);

    start = w.begin_block();
    if (input.field && !input.field->empty()) put_field(w, *input.field, input.post);
    w.end_block(start);

    const std::uint32_t crc =
        static_cast<std::uint32_t>(crc32(0L, w.bytes.data(), static_cast<uInt>(w.bytes.size())));
    w.put(crc);
    return w.bytes;
}

namespace {

struct ParsedFile {
    ContainerHeader header;
    std::uint32_t flags_length = 0;
    std::array<std::span<const std::uint8_t>, 5> blocks;
};

ParsedFile parse(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kContainerMagic.size()) throw DecodeError(DecodeError::Code::truncated, "container is truncated");
    if (!std::equal(kContainerMagic.begin(), kContainerMagic.end(), bytes.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
        throw DecodeError(DecodeError::Code::bad_magic, "not a compact scene container");
    if (bytes.size() < kHeaderBytes + kCrcBytes) throw DecodeError(DecodeError::Code::truncated, "container is truncated");
    Reader head(bytes.subspan(8, kHeaderBytes - 8));
    ParsedFile out;
    out.header.version = head.get<std::uint32_t>();
    if (out.header.version != kContainerVersion)
        throw DecodeError(DecodeError::Code::bad_version, "unsupported container version " + std::to_string(out.header.version));
    out.header.count = head.get<std::uint64_t>();

    const auto body = bytes.first(bytes.size() - kCrcBytes);
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + body.size(), kCrcBytes);
    const auto actual = static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size())));
    if (stored != actual) throw DecodeError(DecodeError::Code::crc_mismatch, "container checksum mismatch");

    Reader r(body.subspan(kHeaderBytes));
    out.flags_length = r.get<std::uint32_t>();
    Reader flags(r.take(out.flags_length));
    const auto bits = flags.get<std::uint32_t>();
    out.header.post_processed = bits & kFlagPost;
    out.header.scale_domain = (bits & kFlagLogScale) ? ScaleDomain::log : ScaleDomain::linear;
    const auto mode = flags.get<std::uint8_t>();
    if (mode > 2) throw DecodeError(DecodeError::Code::malformed, "unknown mask mode");
    out.header.mask_mode = static_cast<MaskMode>(mode);
    out.header.codebook_size = flags.get<std::uint32_t>();
    out.header.num_stages = flags.get<std::uint32_t>();
    out.header.field = read_field_config(flags);
    for (auto& block : out.blocks) block = r.take(r.get<std::uint64_t>());
    r.expect_end("container");
    return out;
}

}  // namespace

ContainerHeader read_header(std::span<const std::uint8_t> bytes) { return parse(bytes).header; }

DecodedScene decode_file(std::span<const std::uint8_t> bytes) {
    const ParsedFile file = parse(bytes);
    DecodedScene scene;
    scene.header = file.header;
    const std::uint64_t n = file.header.count;

    Reader pos(file.blocks[0]);
    if (pos.remaining() != n * 6) throw DecodeError(DecodeError::Code::malformed, "position block size mismatch");
    scene.positions.resize(static_cast<std::size_t>(n));
    for (Vec3& p : scene.positions)
        for (int c = 0; c < 3; ++c) p[c] = pos.get_half();

    Reader opa(file.blocks[1]);
    if (file.header.post_processed && n > 0) {
        scene.opacities = get_quantized(opa, n);
    } else {
        if (opa.remaining() != n * 2) throw DecodeError(DecodeError::Code::malformed, "opacity block size mismatch");
        scene.opacities.resize(static_cast<std::size_t>(n));
        for (double& o : scene.opacities) o = opa.get_half();
    }
    opa.expect_end("opacity block");
    for (double& o : scene.opacities) o = std::clamp(o, 0.0, 1.0);

    if (!file.blocks[2].empty()) {
        ScaleDomain domain = ScaleDomain::linear;
        get_codec(Reader(file.blocks[2]), n, 3, scene.scale_codec, scene.scale_indices, &domain);
        get_codec(Reader(file.blocks[3]), n, 4, scene.rotation_codec, scene.rotation_indices, nullptr);
        const VectorSet scales = rvq_decode(scene.scale_indices, scene.scale_codec);
        const VectorSet rotations = rvq_decode(scene.rotation_indices, scene.rotation_codec);
        scene.scales.resize(static_cast<std::size_t>(n));
        scene.rotations.resize(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = scales.row(i);
            scene.scales[i] = Vec3(s[0], s[1], s[2]);
            if (domain == ScaleDomain::log) scene.scales[i] = scene.scales[i].array().exp().matrix();
            const auto q = rotations.row(i);
            const Vec4 raw(q[0], q[1], q[2], q[3]);
            scene.rotations[i] = raw.norm() > 0.0 && raw.allFinite() ? canonical_quaternion(raw) : Vec4(1, 0, 0, 0);
        }
    } else if (n > 0 || !file.blocks[3].empty()) {
        throw DecodeError(DecodeError::Code::malformed, "geometry codecs are missing");
    }

    if (!file.blocks[4].empty()) {
        try {
            file.header.field.validate();
        } catch (const Error&) {
            throw DecodeError(DecodeError::Code::malformed, "field configuration is invalid");
        }
        get_field(Reader(file.blocks[4]), file.header.field, file.header.post_processed, scene.field);
    } else if (n > 0) {
        throw DecodeError(DecodeError::Code::malformed, "color field is missing");
    }
    return scene;
}

std::vector<Vec3> DecodedScene::colors(const Vec3& camera_center, const FeatureCache* cache) const {
    if (positions.empty()) return {};
    return field_colors(positions, camera_center, field, cache);
}

GaussianCloud DecodedScene::to_cloud(const Vec3& bake_direction) const {
    GaussianCloud cloud;
    cloud.sh_degree = 0;
    cloud.positions = positions;
    cloud.opacities = opacities;
    cloud.rotations = rotations;
    cloud.scales.resize(size());
    for (std::size_t i = 0; i < size(); ++i) cloud.scales[i] = scales[i].cwiseAbs().cwiseMax(1e-8);
    cloud.sh.resize(size() * 3);
    if (!positions.empty()) {
        const Vec3 dir = bake_direction.norm() > 0.0 ? Vec3(bake_direction.normalized()) : Vec3(0, 0, 1);
        const std::vector<Vec3> dirs(size(), dir);
        const auto raw = field_raw_outputs(positions, dirs, field);
        for (std::size_t i = 0; i < size(); ++i)
            for (int c = 0; c < 3; ++c) cloud.sh[i * 3 + c] = raw[i][c];
    }
    return cloud;
}

StorageReport stats(std::span<const std::uint8_t> bytes) {
    const ParsedFile file = parse(bytes);
    StorageReport report;
    report.count = file.header.count;
    report.position = file.blocks[0].size();
    report.opacity = file.blocks[1].size();
    report.scale = file.blocks[2].size();
    report.rotation = file.blocks[3].size();
    if (!file.blocks[4].empty()) {
        Reader r(file.blocks[4]);
        report.hash = r.get<std::uint64_t>();
        r.take(report.hash);
        report.mlp = r.get<std::uint64_t>();
    }
    report.total = bytes.size();
    report.overhead = report.total - report.position - report.opacity - report.scale - report.rotation - report.hash -
                      report.mlp;
    report.baseline = report.count * kBaselineBytesPerGaussian;
    if (report.total > 0 && report.baseline > 0)
        report.ratio = static_cast<double>(report.baseline) / static_cast<double>(report.total);
    return report;
}

StorageReport predict_storage(std::uint64_t count, std::uint32_t codebook_size, std::uint32_t num_stages,
                              const FieldConfig& field) {
    StorageReport report;
    report.count = count;
    report.position = count * 6;
    report.opacity = count * 2;
    const std::uint64_t index_bytes = (count * num_stages * static_cast<std::uint64_t>(bits_for(codebook_size)) + 7) / 8;
    const std::uint64_t codec_header = 3 * 4 + 1 + 1;
    report.scale = codec_header + static_cast<std::uint64_t>(num_stages) * codebook_size * 3 * 4 + index_bytes;
    report.rotation = codec_header + static_cast<std::uint64_t>(num_stages) * codebook_size * 4 * 4 + index_bytes;
    report.hash = hash_table_entries(field) * static_cast<std::uint64_t>(field.features_per_level) * 2;
    report.mlp = mlp_parameter_count(field) * 2;
    const std::uint64_t flags = 4 + 1 + 4 + 4 + 7 * 4;
    report.overhead = kHeaderBytes + 4 + flags + 5 * 8 + 2 * 8 + kCrcBytes;
    report.total = report.position + report.opacity + report.scale + report.rotation + report.hash + report.mlp +
                   report.overhead;
    report.baseline = count * kBaselineBytesPerGaussian;
    if (report.total > 0 && report.baseline > 0)
        report.ratio = static_cast<double>(report.baseline) / static_cast<double>(report.total);
    return report;
}

std::string storage_report_json(const StorageReport& report) {
    nlohmann::json j;
    j["count"] = report.count;
    j["bytes"] = {{"position", report.position}, {"opacity", report.opacity}, {"scale", report.scale},
                  {"rotation", report.rotation},  {"hash", report.hash},       {"mlp", report.mlp},
                  {"overhead", report.overhead},  {"total", report.total}};
    j["baseline_bytes"] = report.baseline;
    if (report.ratio) j["ratio"] = *report.ratio;
    else j["ratio"] = "n/a";
    return j.dump(2);
}

}  // namespace gscodec
