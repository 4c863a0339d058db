#include <adaptrack/error.hpp>
#include <adaptrack/image.hpp>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cstring>

namespace adaptrack {

Image read_image(const std::filesystem::path& path) {
    const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (mat.empty()) {
        throw DataError(path.string() + ": cannot decode image");
    }
    Image img(mat.cols, mat.rows, 3);
    for (int y = 0; y < mat.rows; ++y) {
        std::memcpy(img.at(0, y), mat.ptr<std::uint8_t>(y), static_cast<std::size_t>(mat.cols) * 3);
    }
    return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
    if (image.channels != 1 && image.channels != 3 && image.channels != 4) {
        throw DataError(path.string() + ": unsupported channel count " + std::to_string(image.channels));
    }
    const cv::Mat mat(image.height, image.width, CV_8UC(image.channels),
                      const_cast<std::uint8_t*>(image.pixels.data()));
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat);
    } catch (const cv::Exception&) {
        ok = false;
    }
    if (!ok) {
        throw DataError(path.string() + ": cannot write PNG");
    }
}

}  // namespace adaptrack
