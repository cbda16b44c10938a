#include "vgyro/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include <jpeglib.h>

namespace vgyro {

namespace {

std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

std::vector<unsigned char> to_bytes(const std::vector<double>& data) {
    std::vector<unsigned char> bytes(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        bytes[i] = static_cast<unsigned char>(
            std::lround(std::clamp(data[i], 0.0, 1.0) * 255.0));
    }
    return bytes;
}

Raster from_bytes(const std::vector<unsigned char>& bytes, int w, int h, int channels) {
    Raster r;
    r.width = w;
    r.height = h;
    r.channels = channels;
    r.data.resize(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) r.data[i] = bytes[i] / 255.0;
    return r;
}

Raster load_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw Error("unreadable-image", "cannot read PNG: " + path);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<unsigned char> bytes(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
        png_image_free(&image);
        throw Error("unreadable-image", "cannot decode PNG: " + path);
    }
    return from_bytes(bytes, static_cast<int>(image.width),
                      static_cast<int>(image.height), color ? 3 : 1);
}

void save_png(const std::string& path, const Raster& raster) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(raster.width);
    image.height = static_cast<png_uint_32>(raster.height);
    image.format = raster.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const std::vector<unsigned char> bytes = to_bytes(raster.data);
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        throw Error("unwritable-image", "cannot write PNG: " + path);
    }
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf env;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->env, 1);
}

Raster load_jpeg(const std::string& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "rb"),
                                                         std::fclose);
    if (!file) throw Error("unreadable-image", "cannot open JPEG: " + path);

    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.env)) {
        jpeg_destroy_decompress(&cinfo);
        throw Error("unreadable-image", "cannot decode JPEG: " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components >= 3 ? JCS_RGB : JCS_GRAYSCALE;
    jpeg_start_decompress(&cinfo);

    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    const int channels = cinfo.output_components;
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = bytes.data() +
                             static_cast<std::size_t>(cinfo.output_scanline) * w * channels;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_bytes(bytes, w, h, channels);
}

void save_jpeg(const std::string& path, const Raster& raster, int quality = 95) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"),
                                                         std::fclose);
    if (!file) throw Error("unwritable-image", "cannot open for write: " + path);

    jpeg_compress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.env)) {
        jpeg_destroy_compress(&cinfo);
        throw Error("unwritable-image", "cannot encode JPEG: " + path);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, file.get());
    cinfo.image_width = static_cast<JDIMENSION>(raster.width);
    cinfo.image_height = static_cast<JDIMENSION>(raster.height);
    cinfo.input_components = raster.channels;
    cinfo.in_color_space = raster.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);

    std::vector<unsigned char> bytes = to_bytes(raster.data);
    while (cinfo.next_scanline < cinfo.image_height) {
        unsigned char* row =
            bytes.data() +
            static_cast<std::size_t>(cinfo.next_scanline) * raster.width * raster.channels;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

}  // namespace

Raster load_raster(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "png") return load_png(path);
    if (ext == "jpg" || ext == "jpeg") return load_jpeg(path);
    throw Error("unsupported-format", "unsupported image extension: " + path);
}

void save_raster(const std::string& path, const Raster& raster) {
    const std::string ext = lower_ext(path);
    if (ext == "png") return save_png(path, raster);
    if (ext == "jpg" || ext == "jpeg") return save_jpeg(path, raster);
    throw Error("unsupported-format", "unsupported image extension: " + path);
}

EquirectImage load_equirect(const std::string& path) {
    const Raster r = load_raster(path);
    if (r.width != 2 * r.height) {
        throw Error("invalid-dimensions",
                    path + ": equirectangular image requires W = 2H");
    }
    EquirectImage img = make_equirect(r.width, r.height, r.channels == 3);
    if (r.channels == 3) {
        img.rgb = r.data;
        for (std::size_t i = 0; i < img.gray.size(); ++i) {
            img.gray[i] =
                0.299 * r.data[3 * i] + 0.587 * r.data[3 * i + 1] + 0.114 * r.data[3 * i + 2];
        }
    } else {
        img.gray = r.data;
    }
    return img;
}

void save_equirect(const std::string& path, const EquirectImage& img) {
    Raster r;
    r.width = img.width;
    r.height = img.height;
    if (img.has_color()) {
        r.channels = 3;
        r.data = img.rgb;
    } else {
        r.channels = 1;
        r.data = img.gray;
    }
    save_raster(path, r);
}

std::vector<double> load_gray_grid(const std::string& path, int& width, int& height) {
    const Raster r = load_raster(path);
    width = r.width;
    height = r.height;
    if (r.channels == 1) return r.data;
    std::vector<double> grid(static_cast<std::size_t>(r.width) * r.height);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = 0.299 * r.data[3 * i] + 0.587 * r.data[3 * i + 1] + 0.114 * r.data[3 * i + 2];
    }
    return grid;
}

void save_gray_grid(const std::string& path, const std::vector<double>& grid,
                    int width, int height) {
    Raster r;
    r.width = width;
    r.height = height;
    r.channels = 1;
    r.data = grid;
    save_raster(path, r);
}

DualFisheyeImage load_dualfisheye(const std::string& path, const LensPair& lenses) {
    const Raster r = load_raster(path);
    DualFisheyeImage df;
    df.width = r.width;
    df.height = r.height;
    df.lenses = lenses;
    df.rgb.resize(static_cast<std::size_t>(r.width) * r.height * 3);
    if (r.channels == 3) {
        df.rgb = r.data;
    } else {
        for (std::size_t i = 0; i < r.data.size(); ++i) {
            df.rgb[3 * i] = df.rgb[3 * i + 1] = df.rgb[3 * i + 2] = r.data[i];
        }
    }
    return df;
}

}  // namespace vgyro
