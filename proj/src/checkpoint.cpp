#include "easynet/checkpoint.hpp"

#include "easynet/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace easynet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};

std::uint64_t fnv1a(const std::vector<char>& bytes, std::size_t count) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < count; ++i) {
        h ^= static_cast<unsigned char>(bytes[i]);
        h *= 1099511628211ull;
    }
    return h;
}

class Writer {
public:
    template <class T>
    void put(T v) {
        const char* p = reinterpret_cast<const char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void put_bytes(const std::string& s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
    std::vector<char> bytes;
};

class Reader {
public:
    explicit Reader(const std::vector<char>& b, std::size_t end) : bytes_(b), end_(end) {}
    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string get_bytes(std::size_t n) {
        need(n);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > end_) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    }
    const std::vector<char>& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

std::string header_text(const ModelConfig& cfg, std::int64_t step) {
    std::ostringstream out;
    out << "mrn.input_size=" << cfg.mrn.input_size << '\n'
        << "mrn.levels=" << cfg.mrn.levels << '\n'
        << "mrn.base_width=" << cfg.mrn.base_width << '\n'
        << "mrn.tap_layers=" << cfg.mrn.tap_layers << '\n'
        << "mrn.seed=" << cfg.mrn.seed << '\n'
        << "msn.hidden_width=" << cfg.msn.hidden_width << '\n'
        << "msn.seed=" << cfg.msn.seed << '\n'
        << "model.se_reduction=" << cfg.se_reduction << '\n'
        << "step=" << step << '\n'
        << "scalar_bytes=" << sizeof(real) << '\n';
    return out.str();
}

ModelConfig parse_header(const std::string& text, std::int64_t& step) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CheckpointError("malformed checkpoint header line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto value = [&](const char* key) -> long long {
        const auto it = kv.find(key);
        if (it == kv.end()) throw CheckpointError(std::string("checkpoint header lacks ") + key);
        try {
            return std::stoll(it->second);
        } catch (const std::exception&) {
            throw CheckpointError(std::string("checkpoint header has a bad value for ") + key);
        }
    };
    ModelConfig cfg;
    cfg.mrn.input_size = static_cast<int>(value("mrn.input_size"));
    cfg.mrn.levels = static_cast<int>(value("mrn.levels"));
    cfg.mrn.base_width = static_cast<int>(value("mrn.base_width"));
    cfg.mrn.tap_layers = static_cast<int>(value("mrn.tap_layers"));
    cfg.mrn.seed = static_cast<std::uint64_t>(value("mrn.seed"));
    cfg.msn.hidden_width = static_cast<int>(value("msn.hidden_width"));
    cfg.msn.seed = static_cast<std::uint64_t>(value("msn.seed"));
    cfg.se_reduction = static_cast<int>(value("model.se_reduction"));
    step = value("step");
    return cfg;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const EasyNet& model, std::int64_t step) {
    Writer w;
    w.bytes.insert(w.bytes.end(), kMagic, kMagic + 8);
    w.put<std::uint32_t>(kCheckpointVersion);
    const std::string header = header_text(model.config(), step);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
    w.put_bytes(header);

    ConstParameterList params;
    model.collect(params);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
    for (const Parameter* p : params) {
        w.put<std::uint16_t>(static_cast<std::uint16_t>(p->name.size()));
        w.put_bytes(p->name);
        const Shape& s = p->value.shape();
        for (int d : {s.n, s.c, s.h, s.w}) w.put<std::int32_t>(d);
        w.put<std::uint8_t>(sizeof(real));
        for (real v : p->value.data()) w.put<real>(v);
    }
    w.put<std::uint64_t>(fnv1a(w.bytes, w.bytes.size()));

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint " + tmp.string());
        out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));
        if (!out) throw IoError("failed writing checkpoint " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

EasyNet load_checkpoint(const std::filesystem::path& path, std::int64_t* step) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 + 4 + 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw CheckpointError(path.string() + " is not an easynet checkpoint");
    }
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + body, 8);
    if (stored != fnv1a(bytes, body)) throw CheckpointError("checksum mismatch in " + path.string());

    Reader r(bytes, body);
    r.get_bytes(8);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
    }
    std::int64_t stored_step = 0;
    const ModelConfig cfg = parse_header(r.get_bytes(r.get<std::uint32_t>()), stored_step);
    EasyNet model;
    try {
        model = EasyNet(cfg);
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("checkpoint holds an invalid config: ") + e.what());
    }

    ParameterList params;
    model.collect(params);
    std::map<std::string, Parameter*> by_name;
    for (Parameter* p : params) by_name[p->name] = p;

    const auto count = r.get<std::uint32_t>();
    if (count != params.size()) {
        throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, model expects " +
                              std::to_string(params.size()));
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.get_bytes(r.get<std::uint16_t>());
        Shape s;
        s.n = r.get<std::int32_t>();
        s.c = r.get<std::int32_t>();
        s.h = r.get<std::int32_t>();
        s.w = r.get<std::int32_t>();
        const auto scalar = r.get<std::uint8_t>();
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw CheckpointError("unexpected tensor " + name + " in checkpoint");
        Parameter& p = *it->second;
        if (!(p.value.shape() == s)) {
            throw CheckpointError("tensor " + name + " has shape " + s.str() + ", model expects " + p.value.shape().str());
        }
        for (real& v : p.value.data()) {
            if (scalar == 4) {
                v = static_cast<real>(r.get<float>());
            } else if (scalar == 8) {
                v = static_cast<real>(r.get<double>());
            } else {
                throw CheckpointError("tensor " + name + " has unsupported scalar size " + std::to_string(scalar));
            }
        }
        by_name.erase(it);
    }
    if (step != nullptr) *step = stored_step;
    return model;
}

} // namespace easynet
