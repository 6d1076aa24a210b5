"""

    rln2.imaging.__init__.py
    ~~~~~~~~~~~~~~~~~~~~~~~~
    Image planes and the exact image transforms the network builds on.

    @author: z33k

"""
from rln2.imaging.plane import ImagePlane, read_png, write_png
from rln2.imaging.colorspace import GuidanceMaps, guidance_planes, hsv_to_rgb, rgb_to_hsv, \
    rgb_to_lab
from rln2.imaging.retinex import ResidualPair, RetinexPair, decompose, recompose
from rln2.imaging.wavelet import SubbandSet, dwt2, idwt2
