#include "finswim/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <sstream>

namespace finswim {

namespace {

void put_f32(std::ostream& os, const std::vector<float>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             std::streamsize(v.size() * sizeof(float)));
}

std::vector<float> get_f32(std::istream& is, size_t n, const char* what) {
    std::vector<float> v(n);
    is.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(float)));
    if (!is) throw FormatError(strfmt("truncated %s payload", what));
    return v;
}

std::vector<float> to_f32(const Array2D& a) {
    std::vector<float> v(a.size());
    for (size_t i = 0; i < v.size(); i++) v[i] = float(a.data()[i]);
    return v;
}

void from_f32(Array2D& a, const std::vector<float>& v) {
    for (size_t i = 0; i < v.size(); i++) a.data()[i] = double(v[i]);
}

void put_u32(std::ostream& os, uint32_t x) {
    os.write(reinterpret_cast<const char*>(&x), 4);
}

uint32_t get_u32(std::istream& is) {
    uint32_t x = 0;
    is.read(reinterpret_cast<char*>(&x), 4);
    if (!is) throw FormatError("truncated checkpoint");
    return x;
}

void put_f64(std::ostream& os, double x) {
    os.write(reinterpret_cast<const char*>(&x), 8);
}

double get_f64(std::istream& is) {
    double x = 0;
    is.read(reinterpret_cast<char*>(&x), 8);
    if (!is) throw FormatError("truncated checkpoint");
    return x;
}

void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, uint32_t(s.size()));
    os.write(s.data(), std::streamsize(s.size()));
}

std::string get_str(std::istream& is) {
    uint32_t n = get_u32(is);
    if (n > 4096) throw FormatError("implausible string length in checkpoint");
    std::string s(n, '\0');
    is.read(s.data(), std::streamsize(n));
    if (!is) throw FormatError("truncated checkpoint");
    return s;
}

}  // namespace

void write_field(const std::string& path, const FlowField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(strfmt("cannot open %s for writing", path.c_str()));
    const Grid& g = f.grid;
    os << "FSFL 1\n"
       << "nx " << g.nx << '\n'
       << "ny " << g.ny << '\n'
       << "h " << fmt_g17(g.h) << '\n'
       << "ox " << fmt_g17(g.origin.x) << '\n'
       << "oy " << fmt_g17(g.origin.y) << '\n'
       << "t " << fmt_g17(f.t) << '\n';
    put_f32(os, to_f32(f.u));
    put_f32(os, to_f32(f.v));
    put_f32(os, to_f32(f.p));
    put_f32(os, to_f32(vorticity(f)));
    if (!os) throw IoError(strfmt("write failed for %s", path.c_str()));
}

FlowField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(strfmt("cannot open %s", path.c_str()));
    std::string first;
    if (!std::getline(is, first)) throw FormatError("missing snapshot header");
    std::istringstream fs(first);
    std::string magic;
    int version = 0;
    fs >> magic >> version;
    if (!fs || magic != "FSFL") throw FormatError("not a flow snapshot");
    if (version != 1) throw VersionError(strfmt("unsupported snapshot version %d", version));

    int nx = 0, ny = 0;
    double h = 0, ox = 0, oy = 0, t = 0;
    bool seen[6] = {};
    for (int k = 0; k < 6; k++) {
        std::string line;
        if (!std::getline(is, line)) throw FormatError("corrupt snapshot header");
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "nx") ls >> nx, seen[0] = true;
        else if (key == "ny") ls >> ny, seen[1] = true;
        else if (key == "h") ls >> h, seen[2] = true;
        else if (key == "ox") ls >> ox, seen[3] = true;
        else if (key == "oy") ls >> oy, seen[4] = true;
        else if (key == "t") ls >> t, seen[5] = true;
        else throw FormatError(strfmt("unknown snapshot header line '%s'", key.c_str()));
        if (!ls) throw FormatError("corrupt snapshot header");
    }
    for (bool s : seen)
        if (!s) throw FormatError("incomplete snapshot header");
    if (nx < 1 || ny < 1 || !(h > 0.0) || !std::isfinite(t))
        throw FormatError("corrupt snapshot header");

    Grid g{nx, ny, h, {ox, oy}};
    FlowField f(g, 0.0);
    f.t = t;
    from_f32(f.u, get_f32(is, f.u.size(), "u"));
    from_f32(f.v, get_f32(is, f.v.size(), "v"));
    from_f32(f.p, get_f32(is, f.p.size(), "p"));
    get_f32(is, size_t(nx) * size_t(ny), "vorticity");  // derived; length check only
    return f;
}

const NetSnapshot* Checkpoint::find(const std::string& role) const {
    for (const NetSnapshot& s : nets)
        if (s.role == role) return &s;
    return nullptr;
}

namespace {

void put_net_config(std::ostream& os, const NetConfig& c) {
    put_u32(os, c.arch == Arch::transformer ? 0u : 1u);
    put_u32(os, uint32_t(c.K));
    put_u32(os, uint32_t(c.obs_dim));
    put_u32(os, uint32_t(c.out_dim));
    put_u32(os, uint32_t(c.d_model));
    put_u32(os, uint32_t(c.heads));
    put_u32(os, uint32_t(c.ffn));
    put_u32(os, uint32_t(c.blocks));
    put_u32(os, uint32_t(c.mlp_hidden));
    put_u32(os, c.with_log_std ? 1u : 0u);
    put_f64(os, c.log_std_init);
    put_f64(os, c.head_scale);
}

NetConfig get_net_config(std::istream& is) {
    NetConfig c;
    c.arch = get_u32(is) == 0 ? Arch::transformer : Arch::mlp;
    c.K = int(get_u32(is));
    c.obs_dim = int(get_u32(is));
    c.out_dim = int(get_u32(is));
    c.d_model = int(get_u32(is));
    c.heads = int(get_u32(is));
    c.ffn = int(get_u32(is));
    c.blocks = int(get_u32(is));
    c.mlp_hidden = int(get_u32(is));
    c.with_log_std = get_u32(is) != 0;
    c.log_std_init = get_f64(is);
    c.head_scale = get_f64(is);
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(strfmt("cannot open %s for writing", path.c_str()));
    os.write("FSCK", 4);
    put_u32(os, 1);  // format version
    put_u32(os, ck.episode);
    put_u32(os, uint32_t(ck.nets.size()));
    for (const NetSnapshot& s : ck.nets) {
        put_str(os, s.role);
        put_net_config(os, s.cfg);
        put_u32(os, uint32_t(s.params.size()));
        for (const NamedParam& p : s.params) {
            put_str(os, p.name);
            put_u32(os, uint32_t(p.value.rows));
            put_u32(os, uint32_t(p.value.cols));
            std::vector<float> v(p.value.size());
            for (size_t i = 0; i < v.size(); i++) v[i] = float(p.value.a[i]);
            put_f32(os, v);
        }
    }
    if (!os) throw IoError(strfmt("write failed for %s", path.c_str()));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(strfmt("cannot open %s", path.c_str()));
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FSCK", 4) != 0) throw FormatError("not a checkpoint file");
    const uint32_t version = get_u32(is);
    if (version != 1) throw VersionError(strfmt("unsupported checkpoint version %u", version));
    Checkpoint ck;
    ck.episode = get_u32(is);
    const uint32_t n_nets = get_u32(is);
    if (n_nets > 8) throw FormatError("implausible net count in checkpoint");
    for (uint32_t k = 0; k < n_nets; k++) {
        NetSnapshot s;
        s.role = get_str(is);
        s.cfg = get_net_config(is);
        s.cfg.validate();
        const uint32_t n_params = get_u32(is);
        if (n_params > 4096) throw FormatError("implausible parameter count in checkpoint");
        for (uint32_t i = 0; i < n_params; i++) {
            NamedParam p;
            p.name = get_str(is);
            const uint32_t r = get_u32(is), c = get_u32(is);
            if (r == 0 || c == 0 || size_t(r) * c > (size_t(1) << 24))
                throw FormatError("implausible parameter shape in checkpoint");
            p.value = Mat(int(r), int(c));
            std::vector<float> v = get_f32(is, p.value.size(), "parameter");
            for (size_t j = 0; j < v.size(); j++) p.value.a[j] = double(v[j]);
            s.params.push_back(std::move(p));
        }
        ck.nets.push_back(std::move(s));
    }
    return ck;
}

NetSnapshot snapshot_net(const std::string& role, const Net& net) {
    NetSnapshot s;
    s.role = role;
    s.cfg = net.config();
    s.params = net.params();
    // store with float32 precision so save -> load -> save is byte-stable
    for (NamedParam& p : s.params)
        for (double& x : p.value.a) x = double(float(x));
    return s;
}

void restore_net(Net& net, const NetSnapshot& snap) {
    if (!(net.config() == snap.cfg))
        throw FormatError("checkpoint geometry does not match the constructed network");
    std::vector<NamedParam>& dst = net.params();
    if (dst.size() != snap.params.size())
        throw FormatError("checkpoint parameter count mismatch");
    for (size_t i = 0; i < dst.size(); i++) {
        if (dst[i].name != snap.params[i].name ||
            !dst[i].value.same_shape(snap.params[i].value))
            throw FormatError(strfmt("checkpoint parameter %s does not match network layout",
                                     snap.params[i].name.c_str()));
        dst[i].value = snap.params[i].value;
    }
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header, bool append)
    : path_(path) {
    const bool fresh = !append;
    f_.open(path, fresh ? std::ios::out : (std::ios::out | std::ios::app));
    if (!f_) throw IoError(strfmt("cannot open %s for writing", path.c_str()));
    if (fresh) {
        for (size_t i = 0; i < header.size(); i++) f_ << (i ? "," : "") << header[i];
        f_ << '\n';
        f_.flush();
    }
}

void CsvWriter::row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); i++) f_ << (i ? "," : "") << fmt_g17(values[i]);
    f_ << '\n';
    f_.flush();
    if (!f_) throw IoError(strfmt("write failed for %s", path_.c_str()));
}

void CsvWriter::row_text(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); i++) f_ << (i ? "," : "") << cells[i];
    f_ << '\n';
    f_.flush();
    if (!f_) throw IoError(strfmt("write failed for %s", path_.c_str()));
}

std::string fmt_g17(double x) { return strfmt("%.17g", x); }

namespace {

std::string digest_hex(EVP_MD_CTX* ctx) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("digest finalisation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hexd = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; i++) {
        out.push_back(hexd[md[i] >> 4]);
        out.push_back(hexd[md[i] & 0xf]);
    }
    return out;
}

EVP_MD_CTX* digest_begin() {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        if (ctx) EVP_MD_CTX_free(ctx);
        throw IoError("cannot initialise SHA-256");
    }
    return ctx;
}

}  // namespace

std::string sha256_bytes(const void* data, size_t n) {
    EVP_MD_CTX* ctx = digest_begin();
    if (EVP_DigestUpdate(ctx, data, n) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("digest update failed");
    }
    return digest_hex(ctx);
}

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(strfmt("cannot open %s for hashing", path.c_str()));
    EVP_MD_CTX* ctx = digest_begin();
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof buf);
        const std::streamsize got = is.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx, buf, size_t(got)) != 1) {
            EVP_MD_CTX_free(ctx);
            throw IoError("digest update failed");
        }
    }
    return digest_hex(ctx);
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(strfmt("cannot open %s", path.c_str()));
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace finswim
