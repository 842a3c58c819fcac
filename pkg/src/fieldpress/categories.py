"""Built-in category fixture: 26 ethnobotanically significant Balinese plants."""

from .model import Category

BALI_26 = (
    Category("aroid", "Aroid", "Amorphophallus paeoniifolius"),
    Category("bamboo-petung", "Bamboo Petung", "Dendrocalamus asper"),
    Category("banana", "Banana", "Musa x paradisiaca"),
    Category("cacao", "Cacao", "Theobroma cacao"),
    Category("cinnamon", "Indonesian Cinnamon", "Cinnamomum burmanii"),
    Category("coffea-arabica", "Coffea Arabica", "Coffea canephora"),
    Category("dragonfruit", "Dragonfruit", "Hylocereus costaricensis"),
    Category("durian", "Durian", "Durio zibethinus"),
    Category("frangipani", "Frangipani", "Plumeria alba"),
    Category("guava", "Guava", "Psidium guajava"),
    Category("jackfruit", "Jackfruit", "Artocarpus heterophyllus"),
    Category("lychee", "Lychee", "Litchi chinensis"),
    Category("mango", "Mango", "Mangifera indica"),
    Category("mangosteen", "Mangosteen", "Garcinia mangostana"),
    Category("nilam", "Nilam", "Pogostemon cablin"),
    Category("papaya", "Papaya", "Carica papaya"),
    Category("passiflora", "Passiflora", "Passiflora edulis"),
    Category("sawo", "Sawo", "Manilkara zapota"),
    Category("snakefruit", "Snakefruit", "Salacca zalacca"),
    Category("starfruit", "Starfruit", "Averrhoa carambola"),
    Category("sugar-palm", "Sugar Palm", "Arenga pinnata"),
    Category("taro", "Taro", "Colocasia esculenta"),
    Category("vanilla", "Vanilla", "Vanilla planifolia"),
    Category("water-guava", "Water Guava", "Syzygium aqueum"),
    Category("white-pepper", "White Pepper", "Piper nigrum"),
    Category("zodia", "Zodia", "Evodia saueolens"),
)
