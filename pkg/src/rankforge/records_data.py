"""Bundled record tables for ranks 5-11 and the low-rank conductor minima.

Rows are (a-invariants, conductor N, |delta|/N, I, rank) for the conductor
table and (a-invariants, |delta|, I, rank) for the discriminant table, where
I counts distinct x-coordinates of known integral points on the minimal
equation.  Everything here is re-verified by the test suite against the
curve/conductor machinery.
"""

# Five smallest known conductors per rank, ranks 5..11.
CONDUCTOR_RECORDS = [
    ([0, 0, 1, -79, 342], 19047851, 1, 39, 5),
    ([1, 0, 0, -22, 219], 20384311, 1, 29, 5),
    ([0, 0, 1, -247, 1476], 22966597, 1, 40, 5),
    ([1, -1, 0, -415, 3481], 34672310, 10, 52, 5),
    ([0, 0, 0, -532, 4420], 37396136, 32, 52, 5),
    ([1, 1, 0, -2582, 48720], 5187563742, 6, 71, 6),
    ([0, 0, 1, -7077, 235516], 5258110041, 243, 67, 6),
    ([1, -1, 0, -2326, 43456], 5739520802, 2, 60, 6),
    ([1, -1, 0, -16249, 799549], 6601024978, 184, 68, 6),
    ([1, -1, 1, -63147, 6081915], 6663562874, 32768, 88, 6),
    ([0, 0, 0, -10012, 346900], 382623908456, 32, 101, 7),
    ([1, 0, 1, -14733, 694232], 536670340706, 8, 77, 7),
    ([0, 0, 1, -36673, 2704878], 814434447535, 5, 84, 7),
    ([1, -1, 0, -92656, 10865908], 858426129202, 142, 92, 7),
    ([1, -1, 0, -18664, 958204], 896913586322, 26, 109, 7),
    ([1, -1, 0, -106384, 13075804], 249649566346838, 14, 124, 8),
    ([1, -1, 0, -222751, 40537273], 292246301470558, 2, 101, 8),
    ([0, 0, 0, -481663, 128212738], 314214346667560, 160, 141, 8),
    ([1, -1, 0, -71899, 5522449], 314658846776578, 34, 130, 8),
    ([1, -1, 0, -124294, 14418784], 315734078239402, 106, 131, 8),
    ([1, -1, 0, -135004, 97151644], 32107342006814614, 122, 191, 9),
    ([1, -1, 0, -613069, 98885089], 43537345103385386, 242, 203, 9),
    ([0, 0, 1, -3835819, 2889890730], 62986816173592807, 67, 142, 9),
    ([1, 0, 1, -1493028, 701820182], 72070075910145406, 2, 139, 9),
    ([1, 0, 1, -1076185, 496031340], 77211251506212554, 344, 156, 9),
    ([0, 0, 1, -16312387, 25970162646], 10189285026863130793, 1331, 262, 10),
    ([1, -1, 0, -10194109, 12647638369], 22006161865320788846, 58, 241, 10),
    ([0, 0, 1, -21078967, 35688990786], 22630148490190627609, 2173, 238, 10),
    ([1, -1, 0, -1536664, 648294124], 25440555737235843986, 2, 207, 10),
    ([1, -1, 0, -4513546, 3716615296], 39432942782223365758, 2, 179, 10),
    ([0, 0, 1, -16359067, 26274178986], 18031737725935636520843, 1, 229, 11),
    ([1, -1, 0, -38099014, 115877816224], 66484354768372183177742, 34, 281, 11),
    ([1, -1, 0, -41032399, 106082399089], 219576020293485812169274, 2, 236, 11),
    ([1, -1, 0, -34125664, 69523358164], 227946110025657660240686, 2, 215, 11),
    ([1, -1, 0, -56880994, 168642718624], 252948166615918192888894, 2, 235, 11),
]

# Five smallest known |delta| per rank, ranks 5..10.
DISCRIMINANT_RECORDS = [
    ([0, 0, 1, -79, 342], 19047851, 39, 5),
    ([1, 0, 0, -22, 219], 20384311, 29, 5),
    ([0, 0, 1, -247, 1476], 22966597, 40, 5),
    ([0, 1, 1, -100, 110], 55726757, 33, 5),
    ([0, 0, 1, -139, 732], 59754491, 32, 5),
    ([1, 0, 0, -9227, 340354], 6822208199, 36, 6),
    ([0, 0, 1, -277, 4566], 7647224363, 49, 6),
    ([0, 0, 1, -379, 5172], 8072781371, 51, 6),
    ([0, 0, 1, -889, 9150], 8796007189, 54, 6),
    ([0, 1, 1, -390, 5460], 9694585723, 43, 6),
    ([0, 0, 1, -1387, 68046], 1829517077483, 71, 7),
    ([0, 0, 1, -5707, 151416], 1991659717477, 68, 7),
    ([1, 0, 1, -5983, 164022], 2010552189452, 72, 7),
    ([1, 0, 1, -14505, 667472], 2132568452204, 71, 7),
    ([0, 0, 1, -15577, 744876], 2206378706437, 71, 7),
    ([0, 1, 1, -23846, 1022562], 409086620841461, 78, 8),
    ([0, 0, 1, -23737, 960366], 457532830151317, 96, 8),
    ([0, 1, 1, -16440, 1394010], 561715239383323, 84, 8),
    ([1, -1, 0, -222751, 40537273], 584492602941116, 101, 8),
    ([1, -1, 0, -201814, 34925104], 643509175703572, 109, 8),
    ([0, 0, 1, -167419, 30261330], 95276302704064331, 135, 9),
    ([1, 0, 1, -1493028, 701820182], 144140151820290812, 139, 9),
    ([0, 0, 1, -514507, 140806716], 151673348057775877, 126, 9),
    ([0, 0, 1, -402157, 96291336], 157107745029925477, 131, 9),
    ([0, 0, 1, -826609, 289956150], 172539371946838571, 120, 9),
    ([1, -1, 0, -1536664, 648294124], 50881111474471687972, 207, 10),
    ([0, 0, 1, -1788817, 843180666], 59202439687694448757, 176, 10),
    ([1, -1, 0, -4513546, 3716615296], 78865885564446731516, 179, 10),
    ([0, 1, 1, -1856500, 1072474760], 87950374485438204043, 154, 10),
    ([0, 0, 1, -2438527, 1545098346], 103294665688000244363, 173, 10),
]

# log N of the per-rank best conductor, before and after the searches
# (ranks 6..11; stored as printed literals, the "old" column is external data).
LOG_CONDUCTOR_COMPARISON = {
    "ranks": (6, 7, 8, 9, 10, 11),
    "old": (22.383, 27.703, 33.962, 40.721, 49.033, 55.852),
    "new": (22.370, 26.670, 33.151, 38.008, 43.768, 51.246),
}

# Smallest conductor for ranks 0..4 (Cremona tables / APECS rank-4 curve).
LOW_RANK_CONDUCTORS = {0: 11, 1: 37, 2: 389, 3: 5077, 4: 234446}

RANK4_CURVE = [1, -1, 0, -79, 289]

# High integral-point-count companions used in cross checks.
MANY_POINTS_RANK7 = ([1, -1, 0, -22221159, 40791791609], 13077343449126)
MESTRE_RANK14 = [0, 0, 1, -2248232106757, 1329472091379662406]
