#include "support/oracles.hpp"

#include "tlconv/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

using namespace tlconv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "tlconv_io_test";
    fs::create_directories(dir);
    return dir / name;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string error_of(const fs::path& p) {
    try {
        read_raw_grid(p);
    } catch (const FormatError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("raw grid round trip is bit-identical") {
    std::mt19937_64 rng(1);
    const GridImage img{oracle::random_plane(13, rng), 0.0625};
    write_raw_grid(img, scratch("img.tlg"));
    const GridImage back = read_raw_image(scratch("img.tlg"));
    CHECK(back.data == img.data);
    CHECK(back.h == img.h);
    CHECK(fs::file_size(scratch("img.tlg")) == kRawHeaderBytes + 13 * 13 * 8);

    GroupFeatureMap f(7, 4, 0.125);
    for (Plane& s : f.slices) s = oracle::random_plane(7, rng);
    write_raw_grid(f, scratch("feat.tlg"));
    const GroupFeatureMap fb = read_raw_grid(scratch("feat.tlg"));
    REQUIRE(fb.t() == 4);
    for (int k = 0; k < 4; ++k) CHECK(fb.slices[k] == f.slices[k]);
    CHECK_THROWS_AS(read_raw_image(scratch("feat.tlg")), FormatError);
}

TEST_CASE("raw grid errors") {
    std::mt19937_64 rng(2);
    write_raw_grid(GridImage{oracle::random_plane(4, rng), 1.0}, scratch("ok.tlg"));
    std::ifstream in(scratch("ok.tlg"), std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    write_bytes(scratch("short.tlg"), bytes.substr(0, bytes.size() - 5));
    const std::string msg = error_of(scratch("short.tlg"));
    CHECK(msg.find("expected 152 bytes, found 147") != std::string::npos);

    write_bytes(scratch("header.tlg"), bytes.substr(0, 10));
    CHECK(error_of(scratch("header.tlg")).find("found 10") != std::string::npos);

    std::string bad = bytes;
    bad[0] = 'X';
    write_bytes(scratch("magic.tlg"), bad);
    try {
        read_raw_grid(scratch("magic.tlg"));
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 0);
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
    std::string reserved = bytes;
    reserved[12] = 1;
    write_bytes(scratch("reserved.tlg"), reserved);
    CHECK(error_of(scratch("reserved.tlg")).find("reserved") != std::string::npos);
}

TEST_CASE("ascii pgm") {
    write_bytes(scratch("a.pgm"), "P2\n# comment\n2 2\n255\n0 255\n0 255\n");
    const GridImage im = read_pgm(scratch("a.pgm"));
    CHECK(im.data(0, 0) == 0.0);
    CHECK(im.data(0, 1) == 1.0);
    CHECK(im.data(1, 0) == 0.0);
    CHECK(im.data(1, 1) == 1.0);
    CHECK(read_pgm(scratch("a.pgm"), 0.5).h == 0.5);

    write_bytes(scratch("rect.pgm"), "P2 3 2 255 0 0 0 0 0 0");
    CHECK_THROWS_AS(read_pgm(scratch("rect.pgm")), FormatError);
    write_bytes(scratch("over.pgm"), "P2 1 1 10 11");
    CHECK_THROWS_AS(read_pgm(scratch("over.pgm")), FormatError);
    write_bytes(scratch("magic.pgm"), "P3 1 1 255 0");
    CHECK_THROWS_AS(read_pgm(scratch("magic.pgm")), FormatError);
}

TEST_CASE("binary pgm") {
    std::string p5 = "P5\n2 2\n255\n";
    p5 += std::string{'\x00', '\x80', '\xff', '\x40'};
    write_bytes(scratch("b.pgm"), p5);
    const GridImage im = read_pgm(scratch("b.pgm"));
    CHECK(im.data(0, 1) == doctest::Approx(128.0 / 255));
    CHECK(im.data(1, 0) == 1.0);

    std::string wide = "P5 1 1 65535\n";
    wide += std::string{'\x80', '\x00'};
    write_bytes(scratch("w.pgm"), wide);
    CHECK(read_pgm(scratch("w.pgm")).data(0, 0) == doctest::Approx(32768.0 / 65535));

    write_bytes(scratch("trunc.pgm"), "P5\n2 2\n255\n\x01");
    CHECK_THROWS_AS(read_pgm(scratch("trunc.pgm")), FormatError);

    Plane p(3);
    p(0, 0) = -1.0;
    p(1, 1) = 0.5;
    p(2, 2) = 2.0;
    write_pgm(GridImage{p, 1.0}, scratch("out.pgm"));
    const GridImage back = read_pgm(scratch("out.pgm"));
    CHECK(back.data(0, 0) == 0.0);
    CHECK(back.data(1, 1) == doctest::Approx(128.0 / 255));
    CHECK(back.data(2, 2) == 1.0);
}
