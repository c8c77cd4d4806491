#include "worldgen/types.hpp"

#include "worldgen/error.hpp"

#include <fmt/format.h>

namespace worldgen
{
    RasterGrid::RasterGrid(const GridSpec& s, double fill, double nodata_value)
        : spec(s), values(s.width * s.height, fill), nodata(nodata_value)
    {
    }

    void RasterGrid::check() const
    {
        if (!spec.valid())
            throw PreconditionError(fmt::format("invalid grid spec {}x{} spacing {}", spec.width, spec.height,
                                                spec.cell_spacing));
        if (values.size() != spec.width * spec.height)
            throw PreconditionError(
                fmt::format("grid holds {} values, expected {}", values.size(), spec.width * spec.height));
    }

    Volume3D::Volume3D(std::size_t x, std::size_t y, std::size_t z, float fill): nx(x), ny(y), nz(z), values(x * y * z, fill)
    {
    }

    void Volume3D::check() const
    {
        if (nx == 0 || ny == 0 || nz == 0)
            throw PreconditionError(fmt::format("empty volume {}x{}x{}", nx, ny, nz));
        if (values.size() != nx * ny * nz)
            throw PreconditionError(fmt::format("volume holds {} values, expected {}", values.size(), nx * ny * nz));
    }
} // namespace worldgen
