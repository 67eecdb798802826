#include "tstar/image.hpp"

#include <fstream>
#include <sstream>

#include "tstar/errors.hpp"

namespace tstar {

namespace {

// Next whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

} // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open image: " + path);
    if (next_token(in) != "P5") throw ParseError("not a binary PGM: " + path);
    GrayImage img;
    try {
        img.width = std::stoll(next_token(in));
        img.height = std::stoll(next_token(in));
        const long long maxval = std::stoll(next_token(in));
        if (maxval != 255) throw ParseError("unsupported maxval in " + path);
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError("malformed PGM header: " + path);
    }
    if (img.width < 1 || img.height < 1) throw ParseError("bad image size: " + path);
    img.pixels.resize(static_cast<std::size_t>(img.width * img.height));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw ParseError("truncated PGM payload: " + path);
    return img;
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write image: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw ParseError("short write on image: " + path);
}

std::string frame_image_path(const std::string& store_dir, FrameIndex frame) {
    std::ostringstream name;
    name << store_dir << '/';
    std::string digits = std::to_string(frame);
    if (digits.size() < 8) digits.insert(0, 8 - digits.size(), '0');
    name << digits << ".pgm";
    return name.str();
}

} // namespace tstar
